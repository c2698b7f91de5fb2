#include "smpkit/examples.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "smpkit/errors.hpp"
#include "smpkit/report.hpp"

namespace smpkit {

std::string example_id_name(ExampleId id) {
    switch (id) {
        case ExampleId::concave_41: return "concave_41";
        case ExampleId::nonsmooth_42: return "nonsmooth_42";
        case ExampleId::quadratic_loss_43: return "quadratic_loss_43";
        case ExampleId::nonconcave_44: return "nonconcave_44";
    }
    return "unknown";
}

std::optional<ExampleId> parse_example_id(const std::string& name) {
    if (name == "concave_41") return ExampleId::concave_41;
    if (name == "nonsmooth_42") return ExampleId::nonsmooth_42;
    if (name == "quadratic_loss_43") return ExampleId::quadratic_loss_43;
    if (name == "nonconcave_44") return ExampleId::nonconcave_44;
    return std::nullopt;
}

double sign_hash(std::uint64_t salt, std::uint64_t path_index, int step) {
    std::uint64_t s = salt ^ (path_index * 0x9E3779B97F4A7C15ULL) ^
                      ((static_cast<std::uint64_t>(step) + 1) * 0xBF58476D1CE4E5B9ULL);
    return (splitmix64(s) & 1ULL) ? 1.0 : -1.0;
}

const ControlSpec& ExampleCase::candidate(const std::string& name) const {
    for (const auto& c : candidates)
        if (c.name == name) return c;
    throw ConfigError("example '" + this->name + "' has no candidate control named '" + name +
                      "'");
}

AdjointValues ExampleCase::analytic_adjoint(const std::string& candidate_name,
                                            const PathBundle& bundle) const {
    const auto it = adjoint_builders.find(candidate_name);
    if (it == adjoint_builders.end())
        throw ConfigError("example '" + name + "' has no closed-form adjoint for candidate '" +
                          candidate_name + "'");
    return it->second(bundle);
}

namespace {

VectorXd scalar(double v) { return VectorXd::Constant(1, v); }

// Adjoint of a constant-control run of the terminal-variance problem:
// p = -c W, q = -c.
std::function<AdjointValues(const PathBundle&)> constant_adjoint_terminal_variance(double c) {
    return [c](const PathBundle& bundle) {
        auto levels = std::make_shared<MatrixXd>(brownian_levels(bundle));
        AdjointValues values;
        values.p = [levels, c](int step, std::size_t path) {
            return scalar(-c * (*levels)(static_cast<int>(path), step));
        };
        values.q = [c](int, std::size_t) { return MatrixXd::Constant(1, 1, -c); };
        return values;
    };
}

// Adjoint of a |u| = c run of the kinked problem: p = c (t-2) W, q = c (t-2).
std::function<AdjointValues(const PathBundle&)> constant_adjoint_kinked(double c) {
    return [c](const PathBundle& bundle) {
        auto levels = std::make_shared<MatrixXd>(brownian_levels(bundle));
        auto grid = std::make_shared<Eigen::VectorXd>(bundle.grid);
        AdjointValues values;
        values.p = [levels, grid, c](int step, std::size_t path) {
            return scalar(c * ((*grid)(step) - 2.0) * (*levels)(static_cast<int>(path), step));
        };
        values.q = [grid, c](int step, std::size_t) {
            return MatrixXd::Constant(1, 1, c * ((*grid)(step) - 2.0));
        };
        return values;
    };
}

double max_abs_over_nodes(const PathBundle& bundle,
                          const std::function<double(int, std::size_t)>& fn) {
    double worst = 0.0;
    for (int p = 0; p < bundle.path_count(); ++p)
        for (int j = 0; j < bundle.steps(); ++j)
            worst = std::max(worst, std::abs(fn(j, static_cast<std::size_t>(p))));
    return worst;
}

} // namespace

ExampleCase build_example(ExampleId id) {
    switch (id) {
        case ExampleId::quadratic_loss_43: return build_example_quadratic_loss({});
        case ExampleId::nonconcave_44: return build_example_nonconcave({});
        default: break;
    }

    ExampleCase out;
    out.id = id;
    out.name = example_id_name(id);
    const GeneratorMatrix single(Eigen::MatrixXd::Zero(1, 1));

    if (id == ExampleId::concave_41) {
        // dx = u dW on [0,1], U = [0,1], cost E[-int u dt + x(1)^2 / 2].
        ScalarRegimeCoefficients block;
        block.diffusion.cu = 1.0;
        block.running_cost.cu = -1.0;
        block.terminal_cost.cxx = 0.5;
        out.spec = make_scalar_problem(single, 1.0, 0.0, 0, ConvexBox::scalar(0.0, 1.0), {block});

        out.candidates.push_back(ControlSpec::constant("optimal", 1.0));
        out.candidates.push_back(ControlSpec::constant("half", 0.5));
        out.candidates.push_back(ControlSpec::constant("zero", 0.0));

        out.hamiltonian_evaluator = [](double, const VectorXd&, const VectorXd& u, int,
                                       const VectorXd&, const MatrixXd& q) {
            return u(0) * (1.0 + q(0, 0));
        };
        out.adjoint_builders["optimal"] = constant_adjoint_terminal_variance(1.0);
        out.adjoint_builders["half"] = constant_adjoint_terminal_variance(0.5);
        out.adjoint_builders["zero"] = constant_adjoint_terminal_variance(0.0);

        // Filtration side-condition of this problem: u(t) + q(t) = 0.
        auto adapted = [](const PathBundle& bundle, const AdjointValues& adjoint) {
            return max_abs_over_nodes(bundle, [&](int j, std::size_t p) {
                return bundle.paths[p].controls(j, 0) + adjoint.q(j, p)(0, 0);
            });
        };
        out.adaptedness_residuals["optimal"] = adapted;

        out.optimal_cost = -0.5;
        out.optimal_candidate = "optimal";
        out.comparison_alternatives.push_back(ControlSpec::constant("half", 0.5));
        out.comparison_alternatives.push_back(ControlSpec::constant("zero", 0.0));
        return out;
    }

    // nonsmooth_42: dx = |u|/2 dW on [0,1], U = [-1,1],
    // cost E[int (x^2 - u^2/2) dt + x(1)^2].
    ScalarRegimeCoefficients block;
    block.diffusion.cabs = 0.5;
    block.running_cost.cxx = 1.0;
    block.running_cost.cuu = -0.5;
    block.terminal_cost.cxx = 1.0;
    out.spec = make_scalar_problem(single, 1.0, 0.0, 0, ConvexBox::scalar(-1.0, 1.0), {block});

    out.candidates.push_back(ControlSpec::constant("plus_one", 1.0));
    out.candidates.push_back(ControlSpec::constant("minus_one", -1.0));
    ControlSpec mix;
    mix.name = "signed_mix";
    mix.rule = [](const ControlContext& ctx) {
        return scalar(sign_hash(0x5157ED42ULL, ctx.path_index, ctx.step));
    };
    out.candidates.push_back(std::move(mix));
    out.candidates.push_back(ControlSpec::constant("zero", 0.0));
    out.candidates.push_back(ControlSpec::constant("half", 0.5));

    out.hamiltonian_evaluator = [](double, const VectorXd& x, const VectorXd& u, int,
                                   const VectorXd&, const MatrixXd& q) {
        return 0.5 * q(0, 0) * std::abs(u(0)) - x(0) * x(0) + 0.5 * u(0) * u(0);
    };
    out.adjoint_builders["plus_one"] = constant_adjoint_kinked(1.0);
    out.adjoint_builders["minus_one"] = constant_adjoint_kinked(1.0);
    out.adjoint_builders["signed_mix"] = constant_adjoint_kinked(1.0);
    out.adjoint_builders["zero"] = constant_adjoint_kinked(0.0);
    out.adjoint_builders["half"] = constant_adjoint_kinked(0.5);

    // Filtration side-condition: (2 - t)|u(t)| + q(t) = 0.
    auto adapted = [](const PathBundle& bundle, const AdjointValues& adjoint) {
        return max_abs_over_nodes(bundle, [&](int j, std::size_t p) {
            const double t = bundle.grid(j);
            return (2.0 - t) * std::abs(bundle.paths[p].controls(j, 0)) + adjoint.q(j, p)(0, 0);
        });
    };
    out.adaptedness_residuals["plus_one"] = adapted;
    out.adaptedness_residuals["minus_one"] = adapted;
    out.adaptedness_residuals["signed_mix"] = adapted;

    out.optimal_cost = -0.125; // -(1/4) int_0^1 t dt with |u| = 1
    out.optimal_candidate = "plus_one";
    out.comparison_alternatives.push_back(ControlSpec::constant("zero", 0.0));
    out.comparison_alternatives.push_back(ControlSpec::constant("half", 0.5));
    ControlSpec ramp;
    ramp.name = "ramp";
    ramp.rule = [](const ControlContext& ctx) { return scalar(ctx.t); };
    out.comparison_alternatives.push_back(std::move(ramp));
    return out;
}

ExampleCase build_example_quadratic_loss(const QuadraticLossParams& params) {
    ExampleCase out;
    out.id = ExampleId::quadratic_loss_43;
    out.name = example_id_name(out.id);

    const GeneratorMatrix generator(params.generator);
    const int d = generator.num_regimes();
    if (params.riskless_rate.size() != d || params.stock_return.size() != d ||
        params.stock_vol.size() != d)
        throw ConfigError("quadratic-loss market data must cover every regime");

    auto rate = std::make_shared<VectorXd>(params.riskless_rate);
    auto vol = std::make_shared<VectorXd>(params.stock_vol);
    auto risk = std::make_shared<VectorXd>(d); // market price of risk
    for (int i = 0; i < d; ++i) {
        if (params.stock_vol(i) == 0.0)
            throw ConfigError("stock volatility must be nonzero in every regime");
        (*risk)(i) = (params.stock_return(i) - params.riskless_rate(i)) / params.stock_vol(i);
    }

    std::vector<ScalarRegimeCoefficients> blocks(d);
    for (int i = 0; i < d; ++i) {
        blocks[i].drift.cx = params.riskless_rate(i);
        blocks[i].drift.cu = params.stock_vol(i) * (*risk)(i);
        blocks[i].diffusion.cu = params.stock_vol(i);
        blocks[i].terminal_cost.cxx = 1.0;
        blocks[i].terminal_cost.cx = -2.0 * params.target;
        blocks[i].terminal_cost.c0 = params.target * params.target;
    }
    out.spec = make_scalar_problem(generator, params.horizon, params.x0, params.initial_regime,
                                   ConvexBox::scalar(-params.box_halfwidth, params.box_halfwidth),
                                   std::move(blocks));

    // Ansatz reduction: phi solves Dphi + (2r - theta^2) phi = 0, phi(T) = 2,
    // and psi solves Dpsi + (r - theta^2) psi = 0, psi(T) = -2 * target.
    out.has_ansatz = true;
    out.has_psi = true;
    out.phi_system.generator = generator;
    out.phi_system.horizon = params.horizon;
    out.phi_system.decay = [rate, risk](double, int i) {
        return 2.0 * (*rate)(i) - (*risk)(i) * (*risk)(i);
    };
    out.phi_system.terminal = VectorXd::Constant(d, 2.0);
    out.psi_system.generator = generator;
    out.psi_system.horizon = params.horizon;
    out.psi_system.decay = [rate, risk](double, int i) {
        return (*rate)(i) - (*risk)(i) * (*risk)(i);
    };
    out.psi_system.terminal = VectorXd::Constant(d, -2.0 * params.target);

    auto phi = std::make_shared<AnsatzCurve>(solve_ansatz_odes(out.phi_system, 1e-3));
    auto psi = std::make_shared<AnsatzCurve>(solve_ansatz_odes(out.psi_system, 1e-3));
    out.phi = *phi;
    out.psi = *psi;

    ControlSpec feedback;
    feedback.name = "feedback";
    feedback.rule = [phi, psi, vol, risk](const ControlContext& ctx) {
        const int i = ctx.regime_left;
        const double ratio = psi->eval(ctx.t, i) / phi->eval(ctx.t, i);
        return scalar(-((*risk)(i) / (*vol)(i)) * ((*ctx.state)(0) + ratio));
    };
    out.candidates.push_back(feedback);

    out.hamiltonian_evaluator = [rate, vol, risk](double, const VectorXd& x, const VectorXd& u,
                                                  int i, const VectorXd& p, const MatrixXd& q) {
        return (*rate)(i) * x(0) * p(0) + u(0) * (*vol)(i) * q(0, 0) +
               u(0) * (*vol)(i) * (*risk)(i) * p(0);
    };

    // p = -(phi x + psi), q = -phi sigma u along a feedback-controlled bundle.
    out.adjoint_builders["feedback"] = [phi, psi, vol](const PathBundle& bundle) {
        const PathBundle* b = &bundle;
        AdjointValues values;
        values.p = [b, phi, psi](int step, std::size_t path) {
            const double t = b->grid(step);
            const int i = b->paths[path].regime.state_before(t);
            const double x = b->paths[path].states(step, 0);
            return scalar(-(phi->eval(t, i) * x + psi->eval(t, i)));
        };
        values.q = [b, phi, vol](int step, std::size_t path) {
            const double t = b->grid(step);
            const int i = b->paths[path].regime.state_before(t);
            const double u = b->paths[path].controls(step, 0);
            return MatrixXd::Constant(1, 1, -(phi->eval(t, i) * (*vol)(i) * u));
        };
        return values;
    };

    out.optimal_candidate = "feedback";
    out.comparison_alternatives.push_back(ControlSpec::constant("no_stock", 0.0));
    out.comparison_alternatives.push_back(ControlSpec::constant("fixed_mix", 0.5));
    return out;
}

ExampleCase build_example_nonconcave(const RegimeSwitchParams& params) {
    if (params.q12 + params.q21 < 2.0 - 1e-12)
        throw ConfigError("nonconcave_44 requires q12 + q21 >= 2 (got q12 = " +
                          std::to_string(params.q12) + ", q21 = " + std::to_string(params.q21) +
                          ")");
    if (params.q12 <= 0.0 || params.q21 <= 0.0)
        throw ConfigError("nonconcave_44 requires strictly positive switching rates");

    ExampleCase out;
    out.id = ExampleId::nonconcave_44;
    out.name = example_id_name(out.id);

    Eigen::MatrixXd rates(2, 2);
    rates << -params.q12, params.q12, params.q21, -params.q21;
    const GeneratorMatrix generator(rates);

    // Regime data: A = (-1, 0), B = (0, -1/2), C = (0, 1), D = (1/2, 1).
    std::vector<ScalarRegimeCoefficients> blocks(2);
    blocks[0].diffusion.cu = 1.0;
    blocks[0].running_cost.cu = -1.0;
    blocks[0].terminal_cost.cxx = 0.5;
    blocks[1].diffusion.cu = 1.0;
    blocks[1].running_cost.cuu = -0.5;
    blocks[1].running_cost.cxx = 1.0;
    blocks[1].terminal_cost.cxx = 1.0;
    out.spec = make_scalar_problem(generator, 1.0, 0.0, 0, ConvexBox::scalar(0.0, 1.0),
                                   std::move(blocks));

    // phi system: phi_t + sum_j q_ij (phi_j - phi_i) = 2 C(i), phi(1, i) = -2 D(i).
    out.has_ansatz = true;
    out.phi_system.generator = generator;
    out.phi_system.horizon = 1.0;
    out.phi_system.forcing = [](double, int i) { return i == 0 ? 0.0 : -2.0; };
    out.phi_system.terminal = (VectorXd(2) << -1.0, -2.0).finished();
    auto phi = std::make_shared<AnsatzCurve>(solve_ansatz_odes(out.phi_system, 1e-3));
    out.phi = *phi;

    const double q12 = params.q12;
    const double q21 = params.q21;
    const double s = q12 + q21;
    const double lam = s - 2.0;
    out.phi_closed_form = [q12, q21, s, lam](double t, int regime) {
        const double expo = std::exp(s * (t - 1.0));
        const double slope = 2.0 * q12 / s * (t - 1.0);
        if (regime == 0) return q12 * lam / (s * s) * (expo - 1.0) + slope - 1.0;
        return q21 * lam / (s * s) * (1.0 - expo) + slope - 2.0;
    };

    ControlSpec optimal;
    optimal.name = "optimal";
    optimal.rule = [phi](const ControlContext& ctx) {
        return scalar(ctx.regime_left == 0 ? -1.0 / phi->eval(ctx.t, 0) : 0.0);
    };
    out.candidates.push_back(optimal);

    out.hamiltonian_evaluator = [](double, const VectorXd& x, const VectorXd& u, int i,
                                   const VectorXd&, const MatrixXd& q) {
        if (i == 0) return u(0) + q(0, 0) * u(0);
        return 0.5 * u(0) * u(0) - x(0) * x(0) + u(0) * q(0, 0);
    };

    // p = phi(t, alpha(t-)) x, q = phi(t, alpha(t-)) u.
    out.adjoint_builders["optimal"] = [phi](const PathBundle& bundle) {
        const PathBundle* b = &bundle;
        AdjointValues values;
        values.p = [b, phi](int step, std::size_t path) {
            const double t = b->grid(step);
            const int i = b->paths[path].regime.state_before(t);
            return scalar(phi->eval(t, i) * b->paths[path].states(step, 0));
        };
        values.q = [b, phi](int step, std::size_t path) {
            const double t = b->grid(step);
            const int i = b->paths[path].regime.state_before(t);
            return MatrixXd::Constant(1, 1, phi->eval(t, i) * b->paths[path].controls(step, 0));
        };
        return values;
    };
    out.optimal_candidate = "optimal";

    // Exact cost of the reference control: the running term collapses to
    // 1/(2 phi(t,1)) on the regime-1 sojourns, so the expected cost is the
    // time integral of the regime-1 marginal times that kernel.
    {
        const int nodes = static_cast<int>(phi->times.size());
        double integral = 0.0;
        double prev_value = 0.0;
        for (int idx = 0; idx < nodes; ++idx) {
            const double t = phi->times(idx);
            const Eigen::MatrixXd marginal = transition_probability(generator, t);
            const double value = marginal(0, 0) * 0.5 / phi->values(idx, 0);
            if (idx > 0)
                integral += 0.5 * (value + prev_value) * (phi->times(idx) - phi->times(idx - 1));
            prev_value = value;
        }
        out.optimal_cost = integral;
    }

    // Ten admissible perturbations around the candidate, all clamped into [0,1].
    auto base_value = [phi](const ControlContext& ctx) {
        return ctx.regime_left == 0 ? -1.0 / phi->eval(ctx.t, 0) : 0.0;
    };
    auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
    struct Pattern {
        std::string name;
        std::function<double(const ControlContext&, double)> shift;
    };
    std::vector<Pattern> patterns = {
        {"pert_r1_plus_010", [](const ControlContext& c, double) { return c.regime_left == 0 ? 0.10 : 0.0; }},
        {"pert_r1_minus_010", [](const ControlContext& c, double) { return c.regime_left == 0 ? -0.10 : 0.0; }},
        {"pert_r1_plus_020", [](const ControlContext& c, double) { return c.regime_left == 0 ? 0.20 : 0.0; }},
        {"pert_r1_minus_020", [](const ControlContext& c, double) { return c.regime_left == 0 ? -0.20 : 0.0; }},
        {"pert_r2_010", [](const ControlContext& c, double) { return c.regime_left == 1 ? 0.10 : 0.0; }},
        {"pert_r2_025", [](const ControlContext& c, double) { return c.regime_left == 1 ? 0.25 : 0.0; }},
        {"pert_global_005", [](const ControlContext&, double) { return 0.05; }},
        {"pert_ramp", [](const ControlContext& c, double) { return 0.1 * c.t; }},
        {"pert_jitter",
         [](const ControlContext& c, double) {
             return 0.1 * sign_hash(0xA5A5F00DULL, c.path_index, c.step);
         }},
        {"pert_flat_half", [](const ControlContext&, double base) { return 0.5 - base; }},
    };
    for (auto& pattern : patterns) {
        ControlSpec alt;
        alt.name = pattern.name;
        auto shift = pattern.shift;
        alt.rule = [base_value, shift, clamp01](const ControlContext& ctx) {
            const double base = base_value(ctx);
            return scalar(clamp01(base + shift(ctx, base)));
        };
        out.comparison_alternatives.push_back(std::move(alt));
    }
    return out;
}

namespace {

json numerics_json(const RunNumerics& nn) {
    return json{{"steps", nn.steps},          {"paths", nn.paths},
                {"ode_step", nn.ode_step},    {"picard_iters", nn.picard_iters},
                {"tol_stat", nn.tol_stat},    {"tol_auto", nn.tol_auto},
                {"tol_ode", nn.tol_ode},      {"threads", nn.threads}};
}

double hamiltonian_identity_probe(const ExampleCase& example, int probes, std::uint64_t seed) {
    if (!example.hamiltonian_evaluator) return 0.0;
    RngStream rng = derive_stream(seed, 99, StreamRole::probe);
    const auto& spec = example.spec;
    double worst = 0.0;
    for (int probe = 0; probe < probes; ++probe) {
        const double t = rng.uniform() * spec.horizon;
        const int regime = static_cast<int>(rng.uniform() * spec.generator.num_regimes());
        VectorXd x(spec.state_dim), p(spec.state_dim);
        for (int a = 0; a < spec.state_dim; ++a) {
            x(a) = 2.0 * rng.normal();
            p(a) = 2.0 * rng.normal();
        }
        MatrixXd q(spec.state_dim, spec.brownian_dim);
        for (int a = 0; a < spec.state_dim; ++a)
            for (int c = 0; c < spec.brownian_dim; ++c) q(a, c) = 2.0 * rng.normal();
        VectorXd u(spec.control_dim);
        for (int c = 0; c < spec.control_dim; ++c) {
            const Interval& b = spec.control_box.bound(c);
            const double lo = std::isfinite(b.lo) ? b.lo : -3.0;
            const double hi = std::isfinite(b.hi) ? b.hi : 3.0;
            u(c) = lo + rng.uniform() * (hi - lo);
        }
        const double assembled = hamiltonian_value(spec, t, x, u, regime, p, q);
        const double closed = example.hamiltonian_evaluator(t, x, u, regime, p, q);
        worst = std::max(worst, std::abs(assembled - closed));
    }
    return worst;
}

} // namespace

json run_example(const ExampleCase& example, const RunNumerics& nn, std::uint64_t seed) {
    json out;
    out["example"] = example.name;
    out["seed"] = seed;
    out["numerics"] = numerics_json(nn);

    json checks = json::array();
    bool all_pass = true;
    auto add_check = [&checks, &all_pass](const std::string& name, bool pass, json detail) {
        detail["name"] = name;
        detail["pass"] = pass;
        checks.push_back(std::move(detail));
        all_pass = all_pass && pass;
    };

    const auto validation = validate_problem(example.spec, 200, seed);
    add_check("assumptions_spot_check", validation.ok(), json{{"report", to_json(validation)}});

    const double identity_gap = hamiltonian_identity_probe(example, 1000, seed);
    add_check("hamiltonian_identity", identity_gap <= 1e-12, json{{"max_diff", identity_gap}});

    const double dt = example.spec.horizon / nn.steps;
    const double tol = nn.tol_stat;
    const int check_paths = std::min(nn.paths, 5000);
    const SimOptions check_sim{nn.steps, check_paths, seed, nn.threads, 1e8};
    const SimOptions full_sim{nn.steps, nn.paths, seed, nn.threads, 1e8};
    const HamiltonianSpec hamiltonian = example.hamiltonian();
    NecessaryOptions nec;
    nec.tol = tol;

    json necessary = json::object();
    json sufficient;
    json costs;

    switch (example.id) {
        case ExampleId::concave_41: {
            const PathBundle bundle = simulate_forward(example.spec,
                                                       example.candidate("optimal"), check_sim);
            const AdjointValues adjoint = example.analytic_adjoint("optimal", bundle);
            const StationarityReport rep =
                check_necessary(example.spec, hamiltonian, adjoint, bundle, nec);
            necessary["optimal"] = to_json(rep);
            add_check("necessary_optimal", rep.all_pass,
                      json{{"max_violation", rep.max_violation}});

            const double adapted =
                example.adaptedness_residuals.at("optimal")(bundle, adjoint);
            add_check("adaptedness_residual", adapted <= 1e-9, json{{"max_residual", adapted}});

            const SufficiencyReport suff =
                check_sufficient(example.spec, hamiltonian, adjoint, bundle, 500, seed + 1);
            sufficient = to_json(suff);
            add_check("sufficient_holds", suff.verdict, json{{"report", to_json(suff)}});

            const PathBundle bundle_half =
                simulate_forward(example.spec, example.candidate("half"), check_sim);
            const AdjointValues adjoint_half = example.analytic_adjoint("half", bundle_half);
            const StationarityReport rep_half =
                check_necessary(example.spec, hamiltonian, adjoint_half, bundle_half, nec);
            necessary["half"] = to_json(rep_half);
            add_check("necessary_half_fails",
                      !rep_half.all_pass && rep_half.pass_fraction == 0.0 &&
                          std::abs(rep_half.max_violation - 0.5) <= 1e-9,
                      json{{"max_violation", rep_half.max_violation},
                           {"pass_fraction", rep_half.pass_fraction}});

            const PathBundle bundle_zero =
                simulate_forward(example.spec, example.candidate("zero"), check_sim);
            const AdjointValues adjoint_zero = example.analytic_adjoint("zero", bundle_zero);
            const StationarityReport rep_zero =
                check_necessary(example.spec, hamiltonian, adjoint_zero, bundle_zero, nec);
            necessary["zero"] = to_json(rep_zero);
            add_check("necessary_zero_fails", !rep_zero.all_pass,
                      json{{"max_violation", rep_zero.max_violation}});

            const CostEstimate cost =
                estimate_cost_streaming(example.spec, example.candidate("optimal"), full_sim);
            out["cost_estimate"] = to_json(cost);
            add_check("optimal_cost_reference",
                      std::abs(cost.mean - *example.optimal_cost) <=
                          3.0 * cost.std_error + 2.0 * dt,
                      json{{"mean", cost.mean},
                           {"reference", *example.optimal_cost},
                           {"allowance", 3.0 * cost.std_error + 2.0 * dt}});

            const CostComparison comparison =
                compare_costs(example.spec, example.candidate("optimal"),
                              example.comparison_alternatives, full_sim);
            costs = to_json(comparison);
            add_check("cost_ranking", comparison.candidate_best, json::object());
            break;
        }
        case ExampleId::nonsmooth_42: {
            for (const std::string name : {"plus_one", "minus_one", "signed_mix", "zero"}) {
                const PathBundle bundle =
                    simulate_forward(example.spec, example.candidate(name), check_sim);
                const AdjointValues adjoint = example.analytic_adjoint(name, bundle);
                const StationarityReport rep =
                    check_necessary(example.spec, hamiltonian, adjoint, bundle, nec);
                necessary[name] = to_json(rep);
                add_check("necessary_" + std::string(name), rep.all_pass,
                          json{{"max_violation", rep.max_violation}});
                if (name == std::string("plus_one")) {
                    const double adapted =
                        example.adaptedness_residuals.at("plus_one")(bundle, adjoint);
                    add_check("adaptedness_residual", adapted <= 1e-9,
                              json{{"max_residual", adapted}});
                    const SufficiencyReport suff = check_sufficient(
                        example.spec, hamiltonian, adjoint, bundle, 500, seed + 1);
                    sufficient = to_json(suff);
                    const bool witness_ok =
                        !suff.verdict && suff.concavity_witness.has_value() &&
                        suff.concavity_witness->margin > 0.0;
                    add_check("sufficient_fails_with_witness", witness_ok,
                              json{{"report", to_json(suff)}});
                }
            }

            const PathBundle bundle_half =
                simulate_forward(example.spec, example.candidate("half"), check_sim);
            const AdjointValues adjoint_half = example.analytic_adjoint("half", bundle_half);
            const StationarityReport rep_half =
                check_necessary(example.spec, hamiltonian, adjoint_half, bundle_half, nec);
            necessary["half"] = to_json(rep_half);
            add_check("necessary_half_fails", !rep_half.all_pass,
                      json{{"max_violation", rep_half.max_violation}});

            const CostComparison comparison =
                compare_costs(example.spec, example.candidate("plus_one"),
                              example.comparison_alternatives, full_sim);
            costs = to_json(comparison);
            double zero_gap = 0.0, zero_gap_se = 0.0;
            for (const auto& alt : comparison.alternatives) {
                if (alt.name == "zero") {
                    zero_gap = alt.gap_mean;
                    zero_gap_se = alt.gap_std_error;
                }
            }
            add_check("cost_ranking", comparison.candidate_best, json::object());
            add_check("zero_gap_reference",
                      std::abs(zero_gap - 0.125) <= 3.0 * zero_gap_se + 0.2 * dt,
                      json{{"gap", zero_gap},
                           {"reference", 0.125},
                           {"allowance", 3.0 * zero_gap_se + 0.2 * dt}});
            break;
        }
        case ExampleId::quadratic_loss_43: {
            const double phi_residual = max_ode_residual(example.phi_system, *example.phi);
            const double psi_residual = max_ode_residual(example.psi_system, *example.psi);
            add_check("ansatz_ode_residual",
                      phi_residual <= nn.tol_ode && psi_residual <= nn.tol_ode,
                      json{{"phi", phi_residual}, {"psi", psi_residual}});

            const int d = example.spec.generator.num_regimes();
            bool terminal_ok = true;
            for (int i = 0; i < d; ++i) {
                terminal_ok = terminal_ok &&
                              example.phi->values(example.phi->times.size() - 1, i) ==
                                  example.phi_system.terminal(i) &&
                              example.psi->values(example.psi->times.size() - 1, i) ==
                                  example.psi_system.terminal(i);
            }
            add_check("ansatz_terminal_values", terminal_ok, json::object());

            json fk = json::object();
            bool fk_ok = true;
            for (int i = 0; i < d; ++i) {
                VectorXd phi_rates(d), psi_rates(d);
                for (int r = 0; r < d; ++r) {
                    phi_rates(r) = example.phi_system.decay(0.0, r);
                    psi_rates(r) = example.psi_system.decay(0.0, r);
                }
                const McEstimate mc_phi =
                    feynman_kac_check(example.spec.generator, phi_rates, 2.0, 0.0,
                                      example.spec.horizon, i, nn.paths, seed + 11 + i,
                                      nn.threads);
                const McEstimate mc_psi = feynman_kac_check(
                    example.spec.generator, psi_rates, example.psi_system.terminal(0), 0.0,
                    example.spec.horizon, i, nn.paths, seed + 17 + i, nn.threads);
                const double phi0 = example.phi->eval(0.0, i);
                const double psi0 = example.psi->eval(0.0, i);
                fk["regime_" + std::to_string(i)] =
                    json{{"phi_ode", phi0},
                         {"phi_mc", to_json(mc_phi)},
                         {"psi_ode", psi0},
                         {"psi_mc", to_json(mc_psi)}};
                fk_ok = fk_ok && std::abs(phi0 - mc_phi.value) <= 3.0 * mc_phi.std_error &&
                        std::abs(psi0 - mc_psi.value) <= 3.0 * mc_psi.std_error;
            }
            out["feynman_kac"] = fk;
            add_check("feynman_kac_agreement", fk_ok, json::object());

            const PathBundle bundle =
                simulate_forward(example.spec, example.candidate("feedback"), check_sim);
            const AdjointValues adjoint = example.analytic_adjoint("feedback", bundle);
            const StationarityReport rep =
                check_necessary(example.spec, hamiltonian, adjoint, bundle, nec);
            necessary["feedback"] = to_json(rep);
            long long interior = 0, total = 0;
            for (int r = 0; r < rep.label_counts.rows(); ++r)
                for (int c = 0; c < rep.label_counts.cols(); ++c) {
                    total += rep.label_counts(r, c);
                    if (static_cast<ActiveCase>(c) == ActiveCase::interior)
                        interior += rep.label_counts(r, c);
                }
            const double interior_fraction =
                total > 0 ? static_cast<double>(interior) / total : 0.0;
            add_check("necessary_feedback", rep.all_pass && interior_fraction >= 0.999,
                      json{{"max_violation", rep.max_violation},
                           {"interior_fraction", interior_fraction}});

            const SufficiencyReport suff =
                check_sufficient(example.spec, hamiltonian, adjoint, bundle, 500, seed + 1);
            sufficient = to_json(suff);
            add_check("sufficient_holds", suff.verdict, json::object());

            const CostComparison comparison =
                compare_costs(example.spec, example.candidate("feedback"),
                              example.comparison_alternatives, full_sim);
            costs = to_json(comparison);
            add_check("cost_ranking", comparison.candidate_best, json::object());

            out["curves"] = json{{"phi", ansatz_curve_json(*example.phi)},
                                 {"psi", ansatz_curve_json(*example.psi)}};
            break;
        }
        case ExampleId::nonconcave_44: {
            const auto& phi = *example.phi;
            const int last = static_cast<int>(phi.times.size()) - 1;
            add_check("ansatz_terminal_values",
                      phi.values(last, 0) == -1.0 && phi.values(last, 1) == -2.0,
                      json{{"phi_T_1", phi.values(last, 0)}, {"phi_T_2", phi.values(last, 1)}});

            double closed_gap = 0.0;
            for (int idx = 0; idx <= last; ++idx)
                for (int r = 0; r < 2; ++r)
                    closed_gap = std::max(closed_gap,
                                          std::abs(phi.values(idx, r) -
                                                   example.phi_closed_form(phi.times(idx), r)));
            add_check("ansatz_matches_closed_form", closed_gap <= 1e-8,
                      json{{"max_diff", closed_gap}});

            const double residual = max_ode_residual(example.phi_system, phi);
            add_check("ansatz_ode_residual", residual <= nn.tol_ode,
                      json{{"phi", residual}});

            const PathBundle bundle =
                simulate_forward(example.spec, example.candidate("optimal"), check_sim);
            const AdjointValues adjoint = example.analytic_adjoint("optimal", bundle);
            const StationarityReport rep =
                check_necessary(example.spec, hamiltonian, adjoint, bundle, nec);
            necessary["optimal"] = to_json(rep);
            add_check("necessary_optimal", rep.all_pass,
                      json{{"max_violation", rep.max_violation}});

            const auto interior_idx = static_cast<int>(ActiveCase::interior);
            const auto lower_idx = static_cast<int>(ActiveCase::lower_bound);
            bool labels_ok = true;
            for (int c = 0; c < 5; ++c) {
                if (c != interior_idx && rep.label_counts(0, c) != 0) labels_ok = false;
                if (c != lower_idx && rep.label_counts(1, c) != 0) labels_ok = false;
            }
            add_check("active_case_labels", labels_ok, json{{"labels", to_json(rep)["labels"]}});

            const SufficiencyReport suff =
                check_sufficient(example.spec, hamiltonian, adjoint, bundle, 500, seed + 1);
            sufficient = to_json(suff);
            add_check("sufficient_fails_as_expected", !suff.verdict, json::object());

            const CostEstimate cost =
                estimate_cost_streaming(example.spec, example.candidate("optimal"), full_sim);
            out["cost_estimate"] = to_json(cost);
            add_check("optimal_cost_reference",
                      std::abs(cost.mean - *example.optimal_cost) <=
                          3.0 * cost.std_error + dt,
                      json{{"mean", cost.mean},
                           {"reference", *example.optimal_cost},
                           {"allowance", 3.0 * cost.std_error + dt}});

            const CostComparison comparison =
                compare_costs(example.spec, example.candidate("optimal"),
                              example.comparison_alternatives, full_sim);
            costs = to_json(comparison);
            add_check("beats_perturbations", comparison.candidate_best, json::object());

            out["curves"] = json{{"phi", ansatz_curve_json(phi)}};
            break;
        }
    }

    out["necessary"] = necessary;
    if (!sufficient.is_null()) out["sufficient"] = sufficient;
    if (!costs.is_null()) out["costs"] = costs;
    out["checks"] = checks;
    out["all_pass"] = all_pass;
    return out;
}

} // namespace smpkit
