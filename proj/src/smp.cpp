#include "smpkit/smp.hpp"

#include <algorithm>
#include <cmath>

#include "smpkit/errors.hpp"
#include "smpkit/threading.hpp"

namespace smpkit {

namespace {

// One-sided derivative of u_c |-> -H from the requested side, assembled from
// the coefficient partials: d(-H) = f_u - b_u' p - tr(sigma_u' q).
double minus_h_one_sided(const ProblemSpec& spec, double t, const VectorXd& x, const VectorXd& u,
                         int regime, const VectorXd& p, const MatrixXd& q, int coord, int side) {
    const double f_u = spec.coeffs.running_cost_u(t, x, u, regime, coord, side);
    const VectorXd b_u = spec.coeffs.drift_u(t, x, u, regime, coord, side);
    const MatrixXd s_u = spec.coeffs.diffusion_u(t, x, u, regime, coord, side);
    return f_u - b_u.dot(p) - (s_u.transpose() * q).trace();
}

bool near_kink(const ProblemSpec& spec, double u_c, double snap_tol) {
    for (double kink : spec.control_kinks)
        if (std::abs(u_c - kink) <= snap_tol) return true;
    return false;
}

} // namespace

Interval HamiltonianSpec::minus_h_gradient_coord(double t, const VectorXd& x, const VectorXd& u,
                                                 int regime, const VectorXd& p, const MatrixXd& q,
                                                 int coord, double snap_tol) const {
    if (!near_kink(*problem, u(coord), snap_tol))
        return Interval::point(minus_h_one_sided(*problem, t, x, u, regime, p, q, coord, +1));
    const double left = minus_h_one_sided(*problem, t, x, u, regime, p, q, coord, -1);
    const double right = minus_h_one_sided(*problem, t, x, u, regime, p, q, coord, +1);
    return {std::min(left, right), std::max(left, right)};
}

StationarityReport check_necessary(const ProblemSpec& spec, const HamiltonianSpec& hamiltonian,
                                   const AdjointValues& adjoint, const PathBundle& bundle,
                                   const NecessaryOptions& options) {
    const int steps = bundle.steps();
    const int paths = bundle.path_count();
    const int k = spec.control_dim;
    const int regimes = spec.generator.num_regimes();

    StationarityReport report;
    report.tol = options.tol;
    report.steps = steps;
    report.paths = paths;
    report.per_step.resize(steps);
    report.label_counts = Eigen::MatrixXi::Zero(regimes, 5);

    long long pass_total = 0;
    for (int j = 0; j < steps; ++j) {
        report.per_step[j].t = bundle.grid(j);
        report.per_step[j].pass_count = 0;
        report.per_step[j].max_violation = 0.0;
    }

    for (int p = 0; p < paths; ++p) {
        const PathSample& sample = bundle.paths[p];
        for (int j = 0; j < steps; ++j) {
            const double t = bundle.grid(j);
            const int regime = sample.regime.state_before(t);
            const VectorXd x = sample.states.row(j).transpose();
            const VectorXd u = sample.controls.row(j).transpose();
            const VectorXd pv = adjoint.p(j, static_cast<std::size_t>(p));
            const MatrixXd qv = adjoint.q(j, static_cast<std::size_t>(p));
            if (pv.size() != spec.state_dim || qv.rows() != spec.state_dim ||
                qv.cols() != spec.brownian_dim)
                throw ShapeError("adjoint values do not match the problem dimensions");

            double tol_node = options.tol;
            if (options.propagate_adjoint_error && adjoint.se) {
                const auto [se_p, se_q] = adjoint.se(j, static_cast<std::size_t>(p));
                double sensitivity = 0.0;
                for (int c = 0; c < k; ++c) {
                    const VectorXd b_u = spec.coeffs.drift_u(t, x, u, regime, c, +1);
                    const MatrixXd s_u = spec.coeffs.diffusion_u(t, x, u, regime, c, +1);
                    sensitivity = std::max(sensitivity, b_u.norm() * se_p + s_u.norm() * se_q);
                }
                tol_node += 3.0 * sensitivity;
            }

            bool node_pass = true;
            double node_violation = 0.0;
            ActiveCase node_label = ActiveCase::interior;
            bool label_fixed = false;
            for (int c = 0; c < k; ++c) {
                const Interval gradient = hamiltonian.minus_h_gradient_coord(
                    t, x, u, regime, pv, qv, c, options.snap_tol);
                const Interval cone =
                    spec.control_box.normal_cone_coord(c, u(c), options.boundary_tol);
                const auto outcome = stationarity_test(gradient, cone, tol_node);
                node_pass = node_pass && outcome.pass;
                node_violation = std::max(node_violation, outcome.violation);

                ActiveCase coord_label = near_kink(spec, u(c), options.snap_tol)
                                             ? ActiveCase::kink
                                             : spec.control_box.classify_coord(
                                                   c, u(c), options.boundary_tol);
                if (!label_fixed && coord_label != ActiveCase::interior) {
                    node_label = coord_label;
                    label_fixed = true;
                }
            }

            report.label_counts(regime, static_cast<int>(node_label)) += 1;
            auto& step_summary = report.per_step[j];
            if (node_pass) {
                ++step_summary.pass_count;
                ++pass_total;
            }
            step_summary.max_violation = std::max(step_summary.max_violation, node_violation);
            if (node_violation > report.max_violation) {
                report.max_violation = node_violation;
                report.worst_step = j;
                report.worst_path = static_cast<std::size_t>(p);
            }
        }
    }

    report.pass_fraction =
        static_cast<double>(pass_total) / (static_cast<double>(steps) * paths);
    report.all_pass = pass_total == static_cast<long long>(steps) * paths;
    return report;
}

SufficiencyReport check_sufficient(const ProblemSpec& spec, const HamiltonianSpec& hamiltonian,
                                   const AdjointValues& adjoint, const PathBundle& bundle,
                                   int probes, std::uint64_t seed) {
    if (probes < 100) throw ConfigError("check_sufficient needs at least 100 probes");
    const double slack = 1e-10;
    SufficiencyReport report;
    report.probes = probes;
    report.terminal_convex = true;
    report.hamiltonian_concave = true;

    RngStream rng = derive_stream(seed, 0, StreamRole::probe);
    const int steps = bundle.steps();
    const int paths = bundle.path_count();
    const int n = spec.state_dim;

    // Terminal-cost midpoint convexity, per regime observed at the horizon.
    const double horizon = bundle.grid(steps);
    for (int probe = 0; probe < probes; ++probe) {
        const int p = static_cast<int>(rng.uniform() * paths);
        const int regime = bundle.paths[p].regime.state_at(horizon);
        const VectorXd anchor = bundle.paths[p].states.row(steps).transpose();
        const double scale = std::max(1.0, anchor.norm());
        VectorXd x1(n), x2(n);
        for (int a = 0; a < n; ++a) {
            x1(a) = anchor(a) + scale * rng.normal();
            x2(a) = anchor(a) + scale * rng.normal();
        }
        const double mid = spec.coeffs.terminal_cost(0.5 * (x1 + x2), regime);
        const double avg = 0.5 * (spec.coeffs.terminal_cost(x1, regime) +
                                  spec.coeffs.terminal_cost(x2, regime));
        const double margin = mid - avg; // > 0 violates convexity
        report.worst_convexity_margin = std::max(report.worst_convexity_margin, margin);
        if (margin > slack) report.terminal_convex = false;
    }

    // Hamiltonian midpoint concavity in (x, u) at sampled nodes.
    for (int probe = 0; probe < probes; ++probe) {
        const int p = static_cast<int>(rng.uniform() * paths);
        const int j = static_cast<int>(rng.uniform() * steps);
        const double t = bundle.grid(j);
        const int regime = bundle.paths[p].regime.state_before(t);
        const VectorXd anchor = bundle.paths[p].states.row(j).transpose();
        const VectorXd pv = adjoint.p(j, static_cast<std::size_t>(p));
        const MatrixXd qv = adjoint.q(j, static_cast<std::size_t>(p));
        const double scale = std::max(1.0, anchor.norm());

        VectorXd x1(n), x2(n);
        for (int a = 0; a < n; ++a) {
            x1(a) = anchor(a) + scale * rng.normal();
            x2(a) = anchor(a) + scale * rng.normal();
        }
        VectorXd u1(spec.control_dim), u2(spec.control_dim);
        for (int c = 0; c < spec.control_dim; ++c) {
            const Interval& b = spec.control_box.bound(c);
            const double lo = std::isfinite(b.lo) ? b.lo : -10.0;
            const double hi = std::isfinite(b.hi) ? b.hi : 10.0;
            u1(c) = lo + rng.uniform() * (hi - lo);
            u2(c) = lo + rng.uniform() * (hi - lo);
        }
        const double h_mid =
            hamiltonian.value(t, 0.5 * (x1 + x2), 0.5 * (u1 + u2), regime, pv, qv);
        const double h_avg = 0.5 * (hamiltonian.value(t, x1, u1, regime, pv, qv) +
                                    hamiltonian.value(t, x2, u2, regime, pv, qv));
        const double margin = h_avg - h_mid; // > 0 violates concavity
        if (margin > report.worst_concavity_margin) {
            report.worst_concavity_margin = margin;
            if (margin > slack) {
                ProbeWitness witness;
                witness.t = t;
                witness.regime = regime;
                witness.x1 = x1;
                witness.u1 = u1;
                witness.x2 = x2;
                witness.u2 = u2;
                witness.p = pv;
                witness.q = qv;
                witness.margin = margin;
                report.concavity_witness = std::move(witness);
            }
        }
        if (margin > slack) report.hamiltonian_concave = false;
    }

    report.verdict = report.terminal_convex && report.hamiltonian_concave;
    return report;
}

CostComparison compare_costs(const ProblemSpec& spec, const ControlSpec& candidate,
                             const std::vector<ControlSpec>& alternatives,
                             const SimOptions& options) {
    const int paths = options.paths;
    const int alt_count = static_cast<int>(alternatives.size());
    Eigen::VectorXd grid(options.steps + 1);
    for (int j = 0; j <= options.steps; ++j) grid(j) = j * spec.horizon / options.steps;
    grid(options.steps) = spec.horizon;

    std::vector<double> candidate_costs(paths);
    std::vector<std::vector<double>> alt_costs(alt_count, std::vector<double>(paths));
    parallel_for(static_cast<std::size_t>(paths), options.threads, [&](std::size_t p) {
        const PathSample base = simulate_path(spec, candidate, options.steps, options.seed, p,
                                              options.blowup_guard);
        candidate_costs[p] = path_cost(spec, base, grid);
        for (int a = 0; a < alt_count; ++a) {
            const PathSample alt = simulate_path(spec, alternatives[a], options.steps,
                                                 options.seed, p, options.blowup_guard);
            alt_costs[a][p] = path_cost(spec, alt, grid);
        }
    });

    auto summarize = [paths](const std::vector<double>& values) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= paths;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double se = paths > 1 ? std::sqrt(ss / (paths - 1) / paths) : 0.0;
        return std::make_pair(mean, se);
    };

    CostComparison comparison;
    comparison.candidate.name = candidate.name;
    std::tie(comparison.candidate.mean, comparison.candidate.std_error) =
        summarize(candidate_costs);
    comparison.candidate_best = true;

    std::vector<double> gaps(paths);
    for (int a = 0; a < alt_count; ++a) {
        ControlCost entry;
        entry.name = alternatives[a].name;
        std::tie(entry.mean, entry.std_error) = summarize(alt_costs[a]);
        for (int p = 0; p < paths; ++p) gaps[p] = alt_costs[a][p] - candidate_costs[p];
        std::tie(entry.gap_mean, entry.gap_std_error) = summarize(gaps);
        entry.beats_candidate = entry.gap_mean < -3.0 * entry.gap_std_error;
        comparison.candidate_best = comparison.candidate_best && !entry.beats_candidate;
        comparison.alternatives.push_back(std::move(entry));
    }
    return comparison;
}

} // namespace smpkit
