#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "smpkit/dynamics.hpp"

namespace smpkit {

/// Coupled per-regime linear ODE system
///   y_t(t, i) = -sum_j q_ij (y(t, j) - y(t, i)) - decay(t, i) y(t, i) - forcing(t, i)
/// integrated backward from y(T, i) = terminal(i). This is the shape the
/// linear-quadratic adjoint ansatz reduces to.
struct AnsatzSystem {
    GeneratorMatrix generator{Eigen::MatrixXd::Zero(1, 1)};
    double horizon = 1.0;
    std::function<double(double, int)> decay;   // may be null (treated as 0)
    std::function<double(double, int)> forcing; // may be null (treated as 0)
    VectorXd terminal;                          // one value per regime
};

/// Grid-sampled per-regime solution curve with linear interpolation between
/// nodes. Node times ascend from 0 to the horizon.
struct AnsatzCurve {
    Eigen::VectorXd times;
    MatrixXd values; // node x regime

    double eval(double t, int regime) const;
};

/// Classical RK4, fixed step, integrating the system backward from the
/// terminal condition. Throws NumericsError if the solution exceeds 1e8.
AnsatzCurve solve_ansatz_odes(const AnsatzSystem& system, double step);

/// Max absolute ODE residual over interior grid nodes and regimes, with the
/// time derivative from a fourth-order central stencil.
double max_ode_residual(const AnsatzSystem& system, const AnsatzCurve& curve);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo evaluation of multiplier * E[exp(int_t^T rates(alpha(s)) ds) |
/// alpha(t) = regime] with the integral computed exactly per regime sojourn.
/// Cross-checks the ansatz ODE curves.
McEstimate feynman_kac_check(const GeneratorMatrix& generator, const VectorXd& exponent_rates,
                             double multiplier, double t, double horizon, int regime, int paths,
                             std::uint64_t seed, int threads = 1);

/// Terminal condition and generator of a regime-switching backward equation
/// driven along simulated forward paths. The generator sees the forward
/// state/control at the node so adjoint equations (whose drift is built from
/// coefficient gradients along the path) are expressible.
struct BsdeSpec {
    std::function<VectorXd(const VectorXd& x_T, int regime_T)> terminal;
    std::function<VectorXd(double t, const VectorXd& x, const VectorXd& u, const VectorXd& y,
                           const MatrixXd& z, int regime)>
        generator; // may be null (generator 0)
    double lipschitz_constant = 0.0;
    bool linear = true; // linear generators need a single backward sweep
};

/// Backward equation of the adjoint processes for a given problem: terminal
/// value -h_x(x_T, alpha_T) and generator H_x(t, x, u, alpha, y, z) assembled
/// from the coefficient state gradients (affine in (y, z), hence linear).
BsdeSpec adjoint_bsde_for(const ProblemSpec& spec);

struct RegressionBasis {
    int degree = 2;        // 0: {1}; 1: {1, x}; 2: {1, x, x (x) x}
    double ridge = 1e-10;  // added to the normal equations
};

/// Discrete backward solution sampled on the forward bundle: y[j] is paths x n,
/// z[j] is paths x (n*m) (row-major in (component, Brownian column)), and the
/// optional jump loadings s[j] are paths x (n*d*d). Regression standard
/// errors are tracked per (step, regime) for tolerance propagation.
struct AdjointSolution {
    Eigen::VectorXd grid;
    std::vector<MatrixXd> y; // size N+1
    std::vector<MatrixXd> z; // size N
    std::vector<MatrixXd> s; // size N when enabled, else empty
    bool has_jump_loadings = false;
    std::vector<double> picard_deltas; // successive-iterate grid norms
    MatrixXd se_y; // N x d
    MatrixXd se_z; // N x d
};

struct BsdeOptions {
    RegressionBasis basis;
    int picard_iters = 20;
    double tol = 1e-10;
    bool jump_loadings = false;
};

/// Least-squares Monte Carlo backward sweep. Conditional expectations are
/// projected on per-regime polynomial bases of the node state; the martingale
/// integrand Z is regressed with the fitted conditional mean subtracted as a
/// control variate. Nonlinear generators run an outer fixed-point loop whose
/// iterates are recorded; it stops at `tol` or errors after three consecutive
/// norm increases.
AdjointSolution solve_bsde_backward(const BsdeSpec& bsde, const PathBundle& bundle,
                                    const BsdeOptions& options);

/// Per-step discrete martingale residual means and standard errors:
/// mean_p [ Y_{j+1} - Y_j + f dt - Z_j dW_j ] per step (jump loadings, when
/// present, are subtracted as well).
MatrixXd bsde_step_residuals(const BsdeSpec& bsde, const PathBundle& bundle,
                             const AdjointSolution& solution);

/// Node-indexed access to adjoint values (p, q) however they were produced:
/// regression output, ansatz curves, or closed forms. `se` (optional) reports
/// (se_p, se_q) regression errors for tolerance propagation.
struct AdjointValues {
    std::function<VectorXd(int step, std::size_t path)> p;
    std::function<MatrixXd(int step, std::size_t path)> q;
    std::function<std::pair<double, double>(int step, std::size_t path)> se; // may be null
};

/// Wraps a regression solution for the checkers. The solution is shared into
/// the closures; the bundle must stay alive while the values are used.
AdjointValues adjoint_values_from_solution(std::shared_ptr<const AdjointSolution> solution,
                                           const PathBundle& bundle, int state_dim,
                                           int brownian_dim);

/// Cumulative Brownian levels W_j = sum of increments, paths x (N+1);
/// convenience for closed-form adjoints expressed through W.
MatrixXd brownian_levels(const PathBundle& bundle, int column = 0);

struct DualityGap {
    double remainder = 0.0;  // | J(u+eps v) - J(u) - E int (H(u)-H(u+eps v)) dt |
    double std_error = 0.0;  // Monte Carlo error of the path-wise remainder
    double cost_gap = 0.0;   // J(u+eps v) - J(u)
    double hamiltonian_gap = 0.0;
};

/// First-order cost expansion residual for the perturbation u + eps*v, with
/// common random numbers between the two cost estimates. The perturbed
/// control reuses the realized base control values (an open-loop shift), so a
/// feedback base control is perturbed as a process, matching the expansion's
/// meaning. Throws AdmissibilityError when the perturbed process exits the box.
DualityGap duality_residual(const ProblemSpec& spec, const PathBundle& base_bundle,
                            const ControlSpec& direction, double eps,
                            const AdjointValues& adjoint, const SimOptions& options);

} // namespace smpkit
