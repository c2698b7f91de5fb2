#include "smpkit/problem.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "smpkit/errors.hpp"
#include "smpkit/rng.hpp"

namespace smpkit {

ControlSpec ControlSpec::constant(std::string name, VectorXd value) {
    ControlSpec spec;
    spec.name = std::move(name);
    spec.rule = [value = std::move(value)](const ControlContext&) { return value; };
    return spec;
}

ControlSpec ControlSpec::constant(std::string name, double value) {
    VectorXd v(1);
    v(0) = value;
    return constant(std::move(name), std::move(v));
}

namespace {

// Signed one-sided slope of |u|: sign(u) away from 0, the requested side at 0.
double abs_slope(double u, int side) {
    if (u > 0.0) return 1.0;
    if (u < 0.0) return -1.0;
    return side >= 0 ? 1.0 : -1.0;
}

} // namespace

ProblemSpec make_scalar_problem(const GeneratorMatrix& generator, double horizon, double x0,
                                int initial_regime, const ConvexBox& control_box,
                                std::vector<ScalarRegimeCoefficients> regimes) {
    if (static_cast<int>(regimes.size()) != generator.num_regimes())
        throw ConfigError("coefficient family must supply one regime block per generator state");
    if (control_box.dim() != 1)
        throw ConfigError("scalar coefficient family requires a one-dimensional control box");

    ProblemSpec spec;
    spec.state_dim = 1;
    spec.brownian_dim = 1;
    spec.control_dim = 1;
    spec.horizon = horizon;
    spec.x0 = VectorXd::Constant(1, x0);
    spec.initial_regime = initial_regime;
    spec.generator = generator;
    spec.control_box = control_box;

    bool has_kink = false;
    for (const auto& r : regimes)
        has_kink = has_kink || r.diffusion.cabs != 0.0 || r.running_cost.cabs != 0.0;
    if (has_kink) spec.control_kinks = {0.0};

    auto table = std::make_shared<std::vector<ScalarRegimeCoefficients>>(std::move(regimes));

    spec.coeffs.drift = [table](double, const VectorXd& x, const VectorXd& u, int i) {
        const auto& c = (*table)[i].drift;
        return VectorXd::Constant(1, c.c0 + c.cx * x(0) + c.cu * u(0));
    };
    spec.coeffs.diffusion = [table](double, const VectorXd& x, const VectorXd& u, int i) {
        const auto& c = (*table)[i].diffusion;
        return MatrixXd::Constant(1, 1, c.c0 + c.cx * x(0) + c.cu * u(0) + c.cabs * std::abs(u(0)));
    };
    spec.coeffs.running_cost = [table](double, const VectorXd& x, const VectorXd& u, int i) {
        const auto& c = (*table)[i].running_cost;
        return c.c0 + c.cx * x(0) + c.cu * u(0) + c.cxx * x(0) * x(0) + c.cuu * u(0) * u(0) +
               c.cabs * std::abs(u(0));
    };
    spec.coeffs.terminal_cost = [table](const VectorXd& x, int i) {
        const auto& c = (*table)[i].terminal_cost;
        return c.c0 + c.cx * x(0) + c.cxx * x(0) * x(0);
    };

    spec.coeffs.drift_x = [table](double, const VectorXd&, const VectorXd&, int i) {
        return MatrixXd::Constant(1, 1, (*table)[i].drift.cx);
    };
    spec.coeffs.diffusion_x = [table](double, const VectorXd&, const VectorXd&, int i) {
        return std::vector<MatrixXd>{MatrixXd::Constant(1, 1, (*table)[i].diffusion.cx)};
    };
    spec.coeffs.running_cost_x = [table](double, const VectorXd& x, const VectorXd&, int i) {
        const auto& c = (*table)[i].running_cost;
        return VectorXd::Constant(1, c.cx + 2.0 * c.cxx * x(0));
    };
    spec.coeffs.terminal_cost_x = [table](const VectorXd& x, int i) {
        const auto& c = (*table)[i].terminal_cost;
        return VectorXd::Constant(1, c.cx + 2.0 * c.cxx * x(0));
    };

    spec.coeffs.drift_u = [table](double, const VectorXd&, const VectorXd&, int i, int, int) {
        return VectorXd::Constant(1, (*table)[i].drift.cu);
    };
    spec.coeffs.diffusion_u = [table](double, const VectorXd&, const VectorXd& u, int i, int,
                                      int side) {
        const auto& c = (*table)[i].diffusion;
        return MatrixXd::Constant(1, 1, c.cu + c.cabs * abs_slope(u(0), side));
    };
    spec.coeffs.running_cost_u = [table](double, const VectorXd&, const VectorXd& u, int i, int,
                                         int side) {
        const auto& c = (*table)[i].running_cost;
        return c.cu + 2.0 * c.cuu * u(0) + c.cabs * abs_slope(u(0), side);
    };

    return spec;
}

double hamiltonian_value(const ProblemSpec& spec, double t, const VectorXd& x, const VectorXd& u,
                         int regime, const VectorXd& p, const MatrixXd& q) {
    const double f = spec.coeffs.running_cost(t, x, u, regime);
    const VectorXd b = spec.coeffs.drift(t, x, u, regime);
    const MatrixXd sigma = spec.coeffs.diffusion(t, x, u, regime);
    return -f + b.dot(p) + (sigma.transpose() * q).trace();
}

namespace {

VectorXd random_vector(RngStream& rng, int dim, double scale) {
    VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v(i) = scale * rng.normal();
    return v;
}

VectorXd random_box_point(RngStream& rng, const ConvexBox& box, double scale) {
    VectorXd v(box.dim());
    for (int c = 0; c < box.dim(); ++c) {
        const Interval& b = box.bound(c);
        double lo = std::isfinite(b.lo) ? b.lo : -scale;
        double hi = std::isfinite(b.hi) ? b.hi : scale;
        v(c) = lo + rng.uniform() * (hi - lo);
    }
    return v;
}

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

} // namespace

ValidationReport validate_problem(const ProblemSpec& spec, int probes, std::uint64_t seed) {
    ValidationReport report;
    report.probes = probes;
    RngStream rng = derive_stream(seed, 0, StreamRole::probe);
    const double fd_step = 1e-6;
    const double fd_tol = 1e-4;

    auto flag = [&report](const std::string& check, const std::string& detail) {
        report.issues.push_back({check, detail});
    };

    for (int p = 0; p < probes; ++p) {
        const double t = rng.uniform() * spec.horizon;
        const int regime = static_cast<int>(rng.uniform() * spec.generator.num_regimes());
        const VectorXd x = random_vector(rng, spec.state_dim, 2.0);
        const VectorXd x_hat = random_vector(rng, spec.state_dim, 2.0);
        const VectorXd u = random_box_point(rng, spec.control_box, 2.0);
        const VectorXd u_hat = random_box_point(rng, spec.control_box, 2.0);

        const VectorXd b1 = spec.coeffs.drift(t, x, u, regime);
        const VectorXd b2 = spec.coeffs.drift(t, x_hat, u_hat, regime);
        const MatrixXd s1 = spec.coeffs.diffusion(t, x, u, regime);
        const MatrixXd s2 = spec.coeffs.diffusion(t, x_hat, u_hat, regime);
        if (!b1.allFinite() || !s1.allFinite()) {
            flag("finite", "drift/diffusion not finite at a probe point");
            continue;
        }

        const double increment = (x - x_hat).norm() + (u - u_hat).norm();
        if ((b1 - b2).norm() > spec.lipschitz_bound * increment + 1e-12)
            flag("lipschitz.drift", "drift increment exceeds K*(|dx|+|du|) at a probe");
        if ((s1 - s2).norm() > spec.lipschitz_bound * increment + 1e-12)
            flag("lipschitz.diffusion", "diffusion increment exceeds K*(|dx|+|du|) at a probe");

        const double f1 = spec.coeffs.running_cost(t, x, u, regime);
        const double f2 = spec.coeffs.running_cost(t, x, u_hat, regime);
        const double growth = (spec.cost_growth_k1 +
                               spec.cost_growth_k2 * (x.norm() + u.norm() + u_hat.norm())) *
                              (u - u_hat).norm();
        if (!std::isfinite(f1) || !std::isfinite(spec.coeffs.terminal_cost(x, regime)))
            flag("finite", "cost not finite at a probe point");
        else if (std::abs(f1 - f2) > growth + 1e-12)
            flag("growth.running_cost", "running-cost control increment exceeds the growth bound");

        // Declared state gradients vs central differences.
        const MatrixXd bx = spec.coeffs.drift_x(t, x, u, regime);
        const VectorXd fx = spec.coeffs.running_cost_x(t, x, u, regime);
        const VectorXd hx = spec.coeffs.terminal_cost_x(x, regime);
        const auto sx = spec.coeffs.diffusion_x(t, x, u, regime);
        if (!all_finite(bx) || !fx.allFinite() || !hx.allFinite())
            flag("finite", "declared gradient not finite at a probe point");
        for (int a = 0; a < spec.state_dim; ++a) {
            VectorXd xp = x, xm = x;
            xp(a) += fd_step;
            xm(a) -= fd_step;
            const VectorXd db =
                (spec.coeffs.drift(t, xp, u, regime) - spec.coeffs.drift(t, xm, u, regime)) /
                (2 * fd_step);
            if ((db - bx.col(a)).norm() > fd_tol)
                flag("gradient.drift", "declared drift_x disagrees with finite differences");
            const MatrixXd ds = (spec.coeffs.diffusion(t, xp, u, regime) -
                                 spec.coeffs.diffusion(t, xm, u, regime)) /
                                (2 * fd_step);
            for (int j = 0; j < spec.brownian_dim; ++j) {
                if (std::abs(ds(0, j) - sx[j](0, a)) > fd_tol && spec.state_dim == 1)
                    flag("gradient.diffusion",
                         "declared diffusion_x disagrees with finite differences");
            }
            const double df = (spec.coeffs.running_cost(t, xp, u, regime) -
                               spec.coeffs.running_cost(t, xm, u, regime)) /
                              (2 * fd_step);
            if (std::abs(df - fx(a)) > fd_tol)
                flag("gradient.running_cost",
                     "declared running_cost_x disagrees with finite differences");
            const double dh =
                (spec.coeffs.terminal_cost(xp, regime) - spec.coeffs.terminal_cost(xm, regime)) /
                (2 * fd_step);
            if (std::abs(dh - hx(a)) > fd_tol)
                flag("gradient.terminal_cost",
                     "declared terminal_cost_x disagrees with finite differences");
        }
        if (report.issues.size() > 32) break; // enough evidence
    }
    return report;
}

} // namespace smpkit
