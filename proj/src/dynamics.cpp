#include "smpkit/dynamics.hpp"

#include <cmath>
#include <string>

#include "smpkit/errors.hpp"
#include "smpkit/threading.hpp"

namespace smpkit {

namespace {

Eigen::VectorXd uniform_grid(double horizon, int steps) {
    Eigen::VectorXd grid(steps + 1);
    const double dt = horizon / steps;
    for (int j = 0; j <= steps; ++j) grid(j) = j * dt;
    grid(steps) = horizon;
    return grid;
}

} // namespace

PathSample simulate_path(const ProblemSpec& spec, const ControlSpec& control, int steps,
                         std::uint64_t seed, std::size_t path_index, double blowup_guard) {
    if (steps < 1) throw ConfigError("simulation needs at least one step");
    const int n = spec.state_dim;
    const int m = spec.brownian_dim;
    const double dt = spec.horizon / steps;
    const double sqrt_dt = std::sqrt(dt);

    RngStream chain_stream = derive_stream(seed, path_index, StreamRole::chain);
    RegimePath regime = simulate_chain(spec.generator, spec.initial_regime, spec.horizon,
                                       chain_stream);

    RngStream noise = derive_stream(seed, path_index, StreamRole::brownian);
    MatrixXd increments(steps, m);
    for (int j = 0; j < steps; ++j)
        for (int c = 0; c < m; ++c) increments(j, c) = sqrt_dt * noise.normal();

    MatrixXd states(steps + 1, n);
    MatrixXd controls(steps, spec.control_dim);
    states.row(0) = spec.x0.transpose();

    VectorXd x = spec.x0;
    for (int j = 0; j < steps; ++j) {
        const double t = j * dt;
        const int regime_left = regime.state_before(t);
        ControlContext ctx;
        ctx.path_index = path_index;
        ctx.step = j;
        ctx.t = t;
        ctx.state = &x;
        ctx.regime_left = regime_left;
        VectorXd u = control.rule(ctx);
        if (u.size() != spec.control_dim)
            throw ShapeError("control rule emitted a value of wrong dimension");
        if (!spec.control_box.contains(u)) {
            if (control.project_into_box)
                u = spec.control_box.project(u);
            else
                throw AdmissibilityError("control '" + control.name +
                                         "' leaves the constraint box at path " +
                                         std::to_string(path_index) + ", step " +
                                         std::to_string(j));
        }
        controls.row(j) = u.transpose();

        const VectorXd drift = spec.coeffs.drift(t, x, u, regime_left);
        const MatrixXd vol = spec.coeffs.diffusion(t, x, u, regime_left);
        x = x + drift * dt + vol * increments.row(j).transpose();
        if (!x.allFinite() || x.norm() > blowup_guard)
            throw NumericsError("state blow-up at path " + std::to_string(path_index) +
                                ", step " + std::to_string(j + 1) +
                                " (|x| > " + std::to_string(blowup_guard) + " or non-finite)");
        states.row(j + 1) = x.transpose();
    }
    return PathSample{std::move(regime), std::move(increments), std::move(states),
                      std::move(controls)};
}

PathBundle simulate_forward(const ProblemSpec& spec, const ControlSpec& control,
                            const SimOptions& options) {
    if (options.paths < 1) throw ConfigError("simulation needs at least one path");
    PathBundle bundle;
    bundle.grid = uniform_grid(spec.horizon, options.steps);
    bundle.paths.reserve(options.paths);
    for (int p = 0; p < options.paths; ++p)
        bundle.paths.emplace_back(PathSample{RegimePath(0, 1.0, {}), {}, {}, {}});
    parallel_for(static_cast<std::size_t>(options.paths), options.threads,
                 [&](std::size_t p) {
                     bundle.paths[p] = simulate_path(spec, control, options.steps, options.seed,
                                                     p, options.blowup_guard);
                 });
    return bundle;
}

double path_cost(const ProblemSpec& spec, const PathSample& sample, const Eigen::VectorXd& grid) {
    const int steps = static_cast<int>(grid.size()) - 1;
    const double dt = grid(1) - grid(0);
    double cost = 0.0;
    for (int j = 0; j < steps; ++j) {
        const double t = grid(j);
        const int regime = sample.regime.state_at(t);
        cost += spec.coeffs.running_cost(t, sample.states.row(j).transpose(),
                                         sample.controls.row(j).transpose(), regime) * dt;
    }
    cost += spec.coeffs.terminal_cost(sample.states.row(steps).transpose(),
                                      sample.regime.state_at(grid(steps)));
    return cost;
}

namespace {

CostEstimate reduce_costs(const std::vector<double>& costs) {
    const int count = static_cast<int>(costs.size());
    double mean = 0.0;
    for (double c : costs) mean += c;
    mean /= count;
    double ss = 0.0;
    for (double c : costs) ss += (c - mean) * (c - mean);
    const double variance = count > 1 ? ss / (count - 1) : 0.0;
    return CostEstimate{mean, std::sqrt(variance / count), count};
}

} // namespace

CostEstimate estimate_cost(const ProblemSpec& spec, const PathBundle& bundle) {
    if (bundle.path_count() == 0) throw DomainError("cost estimate over an empty bundle");
    std::vector<double> costs(bundle.path_count());
    for (int p = 0; p < bundle.path_count(); ++p)
        costs[p] = path_cost(spec, bundle.paths[p], bundle.grid);
    return reduce_costs(costs);
}

CostEstimate estimate_cost_streaming(const ProblemSpec& spec, const ControlSpec& control,
                                     const SimOptions& options) {
    if (options.paths < 1) throw DomainError("cost estimate over an empty bundle");
    const Eigen::VectorXd grid = uniform_grid(spec.horizon, options.steps);
    std::vector<double> costs(options.paths);
    parallel_for(static_cast<std::size_t>(options.paths), options.threads, [&](std::size_t p) {
        const PathSample sample = simulate_path(spec, control, options.steps, options.seed, p,
                                                options.blowup_guard);
        costs[p] = path_cost(spec, sample, grid);
    });
    return reduce_costs(costs);
}

double lipschitz_ratio_probe(const ProblemSpec& spec, const ControlSpec& control_a,
                             const ControlSpec& control_b, const SimOptions& options) {
    const int steps = options.steps;
    const int paths = options.paths;
    const double dt = spec.horizon / steps;

    std::vector<Eigen::VectorXd> fourth_moment(paths);
    std::vector<double> control_gap(paths);
    parallel_for(static_cast<std::size_t>(paths), options.threads, [&](std::size_t p) {
        const PathSample a = simulate_path(spec, control_a, steps, options.seed, p,
                                           options.blowup_guard);
        const PathSample b = simulate_path(spec, control_b, steps, options.seed, p,
                                           options.blowup_guard);
        Eigen::VectorXd node_diff(steps + 1);
        for (int j = 0; j <= steps; ++j) {
            const double diff = (a.states.row(j) - b.states.row(j)).norm();
            node_diff(j) = diff * diff * diff * diff;
        }
        fourth_moment[p] = node_diff;
        double gap = 0.0;
        for (int j = 0; j < steps; ++j) {
            const double du = (a.controls.row(j) - b.controls.row(j)).norm();
            gap += du * du * du * du * dt;
        }
        control_gap[p] = gap;
    });

    Eigen::VectorXd mean_fourth = Eigen::VectorXd::Zero(steps + 1);
    double mean_gap = 0.0;
    for (int p = 0; p < paths; ++p) {
        mean_fourth += fourth_moment[p];
        mean_gap += control_gap[p];
    }
    mean_fourth /= paths;
    mean_gap /= paths;
    if (mean_gap <= 0.0)
        throw DomainError("lipschitz_ratio_probe: controls coincide on the grid");
    return mean_fourth.maxCoeff() / mean_gap;
}

} // namespace smpkit
