#include "smpkit/adjoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "smpkit/errors.hpp"
#include "smpkit/threading.hpp"

namespace smpkit {

double AnsatzCurve::eval(double t, int regime) const {
    const int nodes = static_cast<int>(times.size());
    if (t <= times(0)) return values(0, regime);
    if (t >= times(nodes - 1)) return values(nodes - 1, regime);
    const double step = times(1) - times(0);
    int idx = static_cast<int>(std::floor((t - times(0)) / step));
    idx = std::clamp(idx, 0, nodes - 2);
    if (t < times(idx)) --idx;
    if (t > times(idx + 1)) ++idx;
    const double w = (t - times(idx)) / (times(idx + 1) - times(idx));
    return (1.0 - w) * values(idx, regime) + w * values(idx + 1, regime);
}

namespace {

VectorXd ansatz_rhs(const AnsatzSystem& system, double t, const VectorXd& y) {
    const int d = system.generator.num_regimes();
    VectorXd out(d);
    for (int i = 0; i < d; ++i) {
        double coupling = 0.0;
        for (int j = 0; j < d; ++j) {
            if (j == i) continue;
            coupling += system.generator.rate(i, j) * (y(j) - y(i));
        }
        const double c = system.decay ? system.decay(t, i) : 0.0;
        const double g = system.forcing ? system.forcing(t, i) : 0.0;
        out(i) = -coupling - c * y(i) - g;
    }
    return out;
}

} // namespace

AnsatzCurve solve_ansatz_odes(const AnsatzSystem& system, double step) {
    if (!(step > 0.0)) throw ConfigError("ansatz ODE step must be positive");
    const int d = system.generator.num_regimes();
    if (system.terminal.size() != d)
        throw ConfigError("ansatz system needs one terminal value per regime");
    const int nodes = std::max(1, static_cast<int>(std::lround(system.horizon / step)));
    const double h = system.horizon / nodes;

    AnsatzCurve curve;
    curve.times.resize(nodes + 1);
    curve.values.resize(nodes + 1, d);
    for (int idx = 0; idx <= nodes; ++idx) curve.times(idx) = idx * h;
    curve.times(nodes) = system.horizon;

    VectorXd y = system.terminal;
    curve.values.row(nodes) = y.transpose();
    for (int idx = nodes; idx > 0; --idx) {
        const double t = curve.times(idx);
        // One RK4 step of size -h, from t down to t - h.
        const VectorXd k1 = ansatz_rhs(system, t, y);
        const VectorXd k2 = ansatz_rhs(system, t - 0.5 * h, y - 0.5 * h * k1);
        const VectorXd k3 = ansatz_rhs(system, t - 0.5 * h, y - 0.5 * h * k2);
        const VectorXd k4 = ansatz_rhs(system, t - h, y - h * k3);
        y = y - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite() || y.cwiseAbs().maxCoeff() > 1e8)
            throw NumericsError("ansatz ODE integration blew up near t = " +
                                std::to_string(t - h));
        curve.values.row(idx - 1) = y.transpose();
    }
    return curve;
}

double max_ode_residual(const AnsatzSystem& system, const AnsatzCurve& curve) {
    const int nodes = static_cast<int>(curve.times.size());
    const int d = static_cast<int>(curve.values.cols());
    if (nodes < 5) return 0.0;
    const double h = curve.times(1) - curve.times(0);
    double worst = 0.0;
    for (int idx = 2; idx < nodes - 2; ++idx) {
        const double t = curve.times(idx);
        VectorXd y = curve.values.row(idx).transpose();
        VectorXd dydt(d);
        for (int i = 0; i < d; ++i) {
            dydt(i) = (-curve.values(idx + 2, i) + 8.0 * curve.values(idx + 1, i) -
                       8.0 * curve.values(idx - 1, i) + curve.values(idx - 2, i)) /
                      (12.0 * h);
        }
        const VectorXd rhs = ansatz_rhs(system, t, y);
        worst = std::max(worst, (dydt - rhs).cwiseAbs().maxCoeff());
    }
    return worst;
}

McEstimate feynman_kac_check(const GeneratorMatrix& generator, const VectorXd& exponent_rates,
                             double multiplier, double t, double horizon, int regime, int paths,
                             std::uint64_t seed, int threads) {
    if (t < 0.0 || t > horizon) throw DomainError("feynman_kac_check requires 0 <= t <= horizon");
    if (exponent_rates.size() != generator.num_regimes())
        throw ConfigError("feynman_kac_check needs one exponent rate per regime");
    const double span = horizon - t;
    if (span <= 0.0) return {multiplier, 0.0};

    std::vector<double> draws(paths);
    parallel_for(static_cast<std::size_t>(paths), threads, [&](std::size_t p) {
        RngStream stream = derive_stream(seed, p, StreamRole::chain);
        const RegimePath path = simulate_chain(generator, regime, span, stream);
        double integral = 0.0;
        double prev = 0.0;
        int state = path.initial_state();
        for (const auto& jump : path.jumps()) {
            integral += (jump.time - prev) * exponent_rates(state);
            prev = jump.time;
            state = jump.state;
        }
        integral += (span - prev) * exponent_rates(state);
        draws[p] = std::exp(integral);
    });

    double mean = 0.0;
    for (double v : draws) mean += v;
    mean /= paths;
    double ss = 0.0;
    for (double v : draws) ss += (v - mean) * (v - mean);
    const double se = paths > 1 ? std::sqrt(ss / (paths - 1) / paths) : 0.0;
    return {multiplier * mean, std::abs(multiplier) * se};
}

BsdeSpec adjoint_bsde_for(const ProblemSpec& spec) {
    BsdeSpec bsde;
    const Coefficients* coeffs = &spec.coeffs;
    bsde.terminal = [coeffs](const VectorXd& x, int regime) {
        return VectorXd(-coeffs->terminal_cost_x(x, regime));
    };
    bsde.generator = [coeffs](double t, const VectorXd& x, const VectorXd& u, const VectorXd& y,
                              const MatrixXd& z, int regime) {
        VectorXd out = -coeffs->running_cost_x(t, x, u, regime);
        out += coeffs->drift_x(t, x, u, regime).transpose() * y;
        const auto sigma_x = coeffs->diffusion_x(t, x, u, regime);
        for (std::size_t c = 0; c < sigma_x.size(); ++c)
            out += sigma_x[c].transpose() * z.col(static_cast<int>(c));
        return out;
    };
    bsde.linear = true;
    return bsde;
}

namespace {

int basis_size(int degree, int n) {
    int size = 1;
    if (degree >= 1) size += n;
    if (degree >= 2) size += n * (n + 1) / 2;
    return size;
}

void fill_basis_row(Eigen::Ref<Eigen::RowVectorXd> row, const VectorXd& x, int degree) {
    int col = 0;
    row(col++) = 1.0;
    if (degree >= 1)
        for (int a = 0; a < x.size(); ++a) row(col++) = x(a);
    if (degree >= 2)
        for (int a = 0; a < x.size(); ++a)
            for (int b = a; b < x.size(); ++b) row(col++) = x(a) * x(b);
}

struct RegimeGroups {
    std::vector<std::vector<int>> members; // regime -> ordered path indices
};

RegimeGroups group_by_regime(const PathBundle& bundle, int step, int regimes) {
    RegimeGroups groups;
    groups.members.resize(regimes);
    const double t = bundle.grid(step);
    for (int p = 0; p < bundle.path_count(); ++p)
        groups.members[bundle.paths[p].regime.state_before(t)].push_back(p);
    return groups;
}

struct SweepResult {
    std::vector<MatrixXd> y;
    std::vector<MatrixXd> z;
    std::vector<MatrixXd> s;
    MatrixXd se_y;
    MatrixXd se_z;
};

// One backward sweep. When `prev` is non-null the generator is evaluated at
// the previous iterate's (Y_j, Z_j); otherwise at the current sweep's
// (Y_{j+1}, Z_j), which is the standard explicit scheme and exact (up to the
// projection) for generators that do not depend on (y, z).
SweepResult backward_sweep(const BsdeSpec& bsde, const PathBundle& bundle,
                           const BsdeOptions& options, const GeneratorMatrix& generator,
                           const SweepResult* prev) {
    const int steps = bundle.steps();
    const int paths = bundle.path_count();
    const double dt = bundle.dt();
    const int regimes = generator.num_regimes();
    const int m = static_cast<int>(bundle.paths[0].brownian_increments.cols());

    // Terminal values fix the component count.
    const double horizon = bundle.grid(steps);
    VectorXd xi0 = bsde.terminal(bundle.paths[0].states.row(steps).transpose(),
                                 bundle.paths[0].regime.state_at(horizon));
    const int n = static_cast<int>(xi0.size());
    const int basis_cols = basis_size(options.basis.degree, static_cast<int>(
                                          bundle.paths[0].states.cols()));

    SweepResult out;
    out.y.assign(steps + 1, MatrixXd::Zero(paths, n));
    out.z.assign(steps, MatrixXd::Zero(paths, n * m));
    if (options.jump_loadings)
        out.s.assign(steps, MatrixXd::Zero(paths, n * regimes * regimes));
    out.se_y = MatrixXd::Zero(steps, regimes);
    out.se_z = MatrixXd::Zero(steps, regimes);

    out.y[steps].row(0) = xi0.transpose();
    for (int p = 1; p < paths; ++p) {
        out.y[steps].row(p) = bsde
                                  .terminal(bundle.paths[p].states.row(steps).transpose(),
                                            bundle.paths[p].regime.state_at(horizon))
                                  .transpose();
    }

    for (int j = steps - 1; j >= 0; --j) {
        const double t = bundle.grid(j);
        const RegimeGroups groups = group_by_regime(bundle, j, regimes);
        for (int r = 0; r < regimes; ++r) {
            const auto& members = groups.members[r];
            if (members.empty()) continue;
            const int rows = static_cast<int>(members.size());

            MatrixXd design(rows, basis_cols);
            for (int g = 0; g < rows; ++g)
                fill_basis_row(design.row(g), bundle.paths[members[g]].states.row(j).transpose(),
                               options.basis.degree);
            MatrixXd gram = design.transpose() * design;
            if (!gram.allFinite()) throw BasisError("regression design matrix is not finite");
            if (options.basis.ridge > 0.0)
                gram.diagonal().array() += options.basis.ridge;
            Eigen::LDLT<MatrixXd> factor(gram);
            if (factor.info() != Eigen::Success ||
                (options.basis.ridge <= 0.0 &&
                 factor.vectorD().minCoeff() <= 1e-14 * factor.vectorD().maxCoeff()))
                throw BasisError("regression design matrix rank-deficient at step " +
                                 std::to_string(j) + ", regime " + std::to_string(r));

            // Conditional mean of Y_{j+1}, reused as a control variate for Z.
            MatrixXd y_next(rows, n);
            for (int g = 0; g < rows; ++g) y_next.row(g) = out.y[j + 1].row(members[g]);
            const MatrixXd mean_coef = factor.solve(design.transpose() * y_next);
            const MatrixXd fitted_mean = design * mean_coef;

            MatrixXd z_targets(rows, n * m);
            for (int g = 0; g < rows; ++g) {
                const auto dw = bundle.paths[members[g]].brownian_increments.row(j);
                for (int l = 0; l < n; ++l) {
                    const double centered = y_next(g, l) - fitted_mean(g, l);
                    for (int c = 0; c < m; ++c)
                        z_targets(g, l * m + c) = centered * dw(c) / dt;
                }
            }
            const MatrixXd z_coef = factor.solve(design.transpose() * z_targets);
            const MatrixXd fitted_z = design * z_coef;
            for (int g = 0; g < rows; ++g) out.z[j].row(members[g]) = fitted_z.row(g);

            // Generator values, then the Y regression target.
            MatrixXd y_targets(rows, n);
            for (int g = 0; g < rows; ++g) {
                const int p = members[g];
                VectorXd f_val = VectorXd::Zero(n);
                if (bsde.generator) {
                    VectorXd y_arg;
                    MatrixXd z_arg(n, m);
                    if (prev) {
                        y_arg = prev->y[j].row(p).transpose();
                        for (int l = 0; l < n; ++l)
                            for (int c = 0; c < m; ++c) z_arg(l, c) = prev->z[j](p, l * m + c);
                    } else {
                        y_arg = y_next.row(g).transpose();
                        for (int l = 0; l < n; ++l)
                            for (int c = 0; c < m; ++c) z_arg(l, c) = fitted_z(g, l * m + c);
                    }
                    f_val = bsde.generator(t, bundle.paths[p].states.row(j).transpose(),
                                           bundle.paths[p].controls.row(j).transpose(), y_arg,
                                           z_arg, r);
                }
                y_targets.row(g) = y_next.row(g) + dt * f_val.transpose();
            }
            const MatrixXd y_coef = factor.solve(design.transpose() * y_targets);
            const MatrixXd fitted_y = design * y_coef;
            for (int g = 0; g < rows; ++g) out.y[j].row(members[g]) = fitted_y.row(g);

            out.se_y(j, r) = std::sqrt((y_targets - fitted_y).squaredNorm() /
                                       std::max(1, rows - 1) / rows);
            out.se_z(j, r) = std::sqrt((z_targets - fitted_z).squaredNorm() /
                                       std::max(1, rows - 1) / rows);

            if (options.jump_loadings) {
                const double t_next = bundle.grid(j + 1);
                for (int to = 0; to < regimes; ++to) {
                    if (to == r || generator.rate(r, to) <= 0.0) continue;
                    const double denom = generator.rate(r, to) * dt;
                    MatrixXd s_targets(rows, n);
                    for (int g = 0; g < rows; ++g) {
                        const auto& path = bundle.paths[members[g]].regime;
                        const CountingRecord upto = counting_record(path, generator, t_next);
                        const CountingRecord before = counting_record(path, generator, t);
                        const double dq =
                            static_cast<double>(upto.jump_counts(r, to) -
                                                before.jump_counts(r, to)) -
                            generator.rate(r, to) *
                                (upto.occupation_times(r) - before.occupation_times(r));
                        s_targets.row(g) = y_next.row(g) * (dq / denom);
                    }
                    const MatrixXd s_coef = factor.solve(design.transpose() * s_targets);
                    const MatrixXd fitted_s = design * s_coef;
                    for (int g = 0; g < rows; ++g)
                        for (int l = 0; l < n; ++l)
                            out.s[j](members[g], l * regimes * regimes + r * regimes + to) =
                                fitted_s(g, l);
                }
            }
        }
    }
    return out;
}

double sweep_distance(const SweepResult& a, const SweepResult& b, double dt) {
    double acc = 0.0;
    const int steps = static_cast<int>(a.z.size());
    const int paths = static_cast<int>(a.y[0].rows());
    for (int j = 0; j < steps; ++j) {
        acc += (a.y[j] - b.y[j]).squaredNorm() * dt;
        acc += (a.z[j] - b.z[j]).squaredNorm() * dt;
    }
    return std::sqrt(acc / paths);
}

} // namespace

AdjointSolution solve_bsde_backward(const BsdeSpec& bsde, const PathBundle& bundle,
                                    const BsdeOptions& options) {
    if (bundle.path_count() < 1) throw DomainError("BSDE solve over an empty bundle");
    const GeneratorMatrix* generator = nullptr;
    // The bundle does not carry the generator; regression only needs the
    // regime count, recovered from the largest regime index observed.
    int regimes = 1;
    for (const auto& path : bundle.paths) {
        regimes = std::max(regimes, path.regime.initial_state() + 1);
        for (const auto& jump : path.regime.jumps()) regimes = std::max(regimes, jump.state + 1);
    }
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(regimes, regimes);
    GeneratorMatrix fallback(zero);
    generator = &fallback;

    SweepResult current = backward_sweep(bsde, bundle, options, *generator, nullptr);
    std::vector<double> deltas;
    if (!bsde.linear && bsde.generator) {
        int rising = 0;
        double last = std::numeric_limits<double>::infinity();
        for (int k = 0; k < options.picard_iters; ++k) {
            SweepResult next = backward_sweep(bsde, bundle, options, *generator, &current);
            const double delta = sweep_distance(next, current, bundle.dt());
            deltas.push_back(delta);
            current = std::move(next);
            if (delta < options.tol) break;
            if (delta > last) {
                if (++rising >= 3)
                    throw ConvergenceError(
                        "fixed-point iteration diverged: three consecutive norm increases");
            } else {
                rising = 0;
            }
            last = delta;
        }
    }

    AdjointSolution solution;
    solution.grid = bundle.grid;
    solution.y = std::move(current.y);
    solution.z = std::move(current.z);
    solution.s = std::move(current.s);
    solution.has_jump_loadings = options.jump_loadings;
    solution.picard_deltas = std::move(deltas);
    solution.se_y = std::move(current.se_y);
    solution.se_z = std::move(current.se_z);
    return solution;
}

MatrixXd bsde_step_residuals(const BsdeSpec& bsde, const PathBundle& bundle,
                             const AdjointSolution& solution) {
    const int steps = bundle.steps();
    const int paths = bundle.path_count();
    const double dt = bundle.dt();
    const int n = static_cast<int>(solution.y[0].cols());
    const int m = static_cast<int>(bundle.paths[0].brownian_increments.cols());
    const int regimes = static_cast<int>(solution.se_y.cols());

    MatrixXd table(steps, 2 * n);
    for (int j = 0; j < steps; ++j) {
        const double t = bundle.grid(j);
        MatrixXd residuals(paths, n);
        for (int p = 0; p < paths; ++p) {
            const int regime = bundle.paths[p].regime.state_before(t);
            VectorXd y_next = solution.y[j + 1].row(p).transpose();
            VectorXd y_here = solution.y[j].row(p).transpose();
            MatrixXd z_here(n, m);
            for (int l = 0; l < n; ++l)
                for (int c = 0; c < m; ++c) z_here(l, c) = solution.z[j](p, l * m + c);
            VectorXd f_val = VectorXd::Zero(n);
            if (bsde.generator)
                f_val = bsde.generator(t, bundle.paths[p].states.row(j).transpose(),
                                       bundle.paths[p].controls.row(j).transpose(), y_next,
                                       z_here, regime);
            const VectorXd res = y_next - y_here + dt * f_val -
                                 z_here * bundle.paths[p].brownian_increments.row(j).transpose();
            (void)regimes;
            residuals.row(p) = res.transpose();
        }
        for (int l = 0; l < n; ++l) {
            const double mean = residuals.col(l).mean();
            const double ss = (residuals.col(l).array() - mean).square().sum();
            table(j, l) = mean;
            table(j, n + l) = paths > 1 ? std::sqrt(ss / (paths - 1) / paths) : 0.0;
        }
    }
    return table;
}

AdjointValues adjoint_values_from_solution(std::shared_ptr<const AdjointSolution> solution,
                                           const PathBundle& bundle, int state_dim,
                                           int brownian_dim) {
    (void)state_dim;
    AdjointValues values;
    const PathBundle* b = &bundle;
    const int m = brownian_dim;
    values.p = [solution](int step, std::size_t path) {
        return VectorXd(solution->y[step].row(static_cast<int>(path)).transpose());
    };
    values.q = [solution, m](int step, std::size_t path) {
        const int n = static_cast<int>(solution->y[0].cols());
        MatrixXd q(n, m);
        for (int l = 0; l < n; ++l)
            for (int c = 0; c < m; ++c)
                q(l, c) = solution->z[step](static_cast<int>(path), l * m + c);
        return q;
    };
    values.se = [solution, b](int step, std::size_t path) {
        const double t = b->grid(step);
        const int regime = b->paths[path].regime.state_before(t);
        return std::make_pair(solution->se_y(step, regime), solution->se_z(step, regime));
    };
    return values;
}

MatrixXd brownian_levels(const PathBundle& bundle, int column) {
    const int steps = bundle.steps();
    MatrixXd levels(bundle.path_count(), steps + 1);
    for (int p = 0; p < bundle.path_count(); ++p) {
        levels(p, 0) = 0.0;
        for (int j = 0; j < steps; ++j)
            levels(p, j + 1) = levels(p, j) + bundle.paths[p].brownian_increments(j, column);
    }
    return levels;
}

DualityGap duality_residual(const ProblemSpec& spec, const PathBundle& base_bundle,
                            const ControlSpec& direction, double eps,
                            const AdjointValues& adjoint, const SimOptions& options) {
    const int steps = base_bundle.steps();
    const int paths = base_bundle.path_count();
    if (options.steps != steps || options.paths != paths)
        throw ShapeError("duality_residual: options do not match the base bundle");
    const double dt = base_bundle.dt();

    // Freeze the direction as a per-path process evaluated along the base paths.
    std::vector<MatrixXd> dir_values(paths);
    for (int p = 0; p < paths; ++p) {
        MatrixXd values(steps, spec.control_dim);
        for (int j = 0; j < steps; ++j) {
            ControlContext ctx;
            ctx.path_index = static_cast<std::size_t>(p);
            ctx.step = j;
            ctx.t = base_bundle.grid(j);
            const VectorXd state = base_bundle.paths[p].states.row(j).transpose();
            ctx.state = &state;
            ctx.regime_left = base_bundle.paths[p].regime.state_before(ctx.t);
            values.row(j) = direction.rule(ctx).transpose();
        }
        dir_values[p] = std::move(values);
    }

    ControlSpec perturbed;
    perturbed.name = "perturbed";
    perturbed.rule = [&base_bundle, &dir_values, eps](const ControlContext& ctx) {
        return VectorXd(base_bundle.paths[ctx.path_index].controls.row(ctx.step).transpose() +
                        eps * dir_values[ctx.path_index].row(ctx.step).transpose());
    };

    std::vector<double> remainders(paths), cost_gaps(paths), ham_gaps(paths);
    parallel_for(static_cast<std::size_t>(paths), options.threads, [&](std::size_t p) {
        const PathSample pert = simulate_path(spec, perturbed, steps, options.seed, p,
                                              options.blowup_guard);
        const double cost_eps = path_cost(spec, pert, base_bundle.grid);
        const double cost_base = path_cost(spec, base_bundle.paths[p], base_bundle.grid);

        double gap = 0.0;
        for (int j = 0; j < steps; ++j) {
            const double t = base_bundle.grid(j);
            const VectorXd x = base_bundle.paths[p].states.row(j).transpose();
            const VectorXd u = base_bundle.paths[p].controls.row(j).transpose();
            const VectorXd u_eps = u + eps * dir_values[p].row(j).transpose();
            const int regime = base_bundle.paths[p].regime.state_before(t);
            const VectorXd pj = adjoint.p(j, p);
            const MatrixXd qj = adjoint.q(j, p);
            const double h_base = hamiltonian_value(spec, t, x, u, regime, pj, qj);
            const double h_eps = hamiltonian_value(spec, t, x, u_eps, regime, pj, qj);
            gap += (h_base - h_eps) * dt; // = (-H(u_eps)) - (-H(u))
        }
        cost_gaps[p] = cost_eps - cost_base;
        ham_gaps[p] = gap;
        remainders[p] = cost_gaps[p] - gap;
    });

    DualityGap result;
    double mean_r = 0.0, mean_c = 0.0, mean_h = 0.0;
    for (int p = 0; p < paths; ++p) {
        mean_r += remainders[p];
        mean_c += cost_gaps[p];
        mean_h += ham_gaps[p];
    }
    mean_r /= paths;
    mean_c /= paths;
    mean_h /= paths;
    double ss = 0.0;
    for (double r : remainders) ss += (r - mean_r) * (r - mean_r);
    result.remainder = std::abs(mean_r);
    result.std_error = paths > 1 ? std::sqrt(ss / (paths - 1) / paths) : 0.0;
    result.cost_gap = mean_c;
    result.hamiltonian_gap = mean_h;
    return result;
}

} // namespace smpkit
