#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "smpkit/chain.hpp"
#include "smpkit/clarke.hpp"

namespace smpkit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Coefficient callables of the controlled dynamics and costs, per regime,
/// together with the state gradients and the one-sided control partials the
/// stationarity machinery needs. Sides are -1 (left) / +1 (right); away from
/// control kinks both sides must agree.
struct Coefficients {
    // drift(t, x, u, i) in R^n
    std::function<VectorXd(double, const VectorXd&, const VectorXd&, int)> drift;
    // diffusion(t, x, u, i) in R^{n x m}
    std::function<MatrixXd(double, const VectorXd&, const VectorXd&, int)> diffusion;
    std::function<double(double, const VectorXd&, const VectorXd&, int)> running_cost;
    std::function<double(const VectorXd&, int)> terminal_cost;

    // State gradients: drift_x is n x n (entry (l, a) = d drift_l / d x_a);
    // diffusion_x[j] is the n x n gradient of the j-th Brownian column.
    std::function<MatrixXd(double, const VectorXd&, const VectorXd&, int)> drift_x;
    std::function<std::vector<MatrixXd>(double, const VectorXd&, const VectorXd&, int)> diffusion_x;
    std::function<VectorXd(double, const VectorXd&, const VectorXd&, int)> running_cost_x;
    std::function<VectorXd(const VectorXd&, int)> terminal_cost_x;

    // One-sided partials in control coordinate `coord` from `side`.
    std::function<VectorXd(double, const VectorXd&, const VectorXd&, int, int, int)> drift_u;
    std::function<MatrixXd(double, const VectorXd&, const VectorXd&, int, int, int)> diffusion_u;
    std::function<double(double, const VectorXd&, const VectorXd&, int, int, int)> running_cost_u;
};

/// Full problem description: dimensions, horizon, initial data, regime
/// generator, coefficient callables, control box and declared control kinks
/// (control values where coefficients may lose smoothness, e.g. |u| at 0).
struct ProblemSpec {
    int state_dim = 1;
    int brownian_dim = 1;
    int control_dim = 1;
    double horizon = 1.0;
    VectorXd x0;
    int initial_regime = 0;
    GeneratorMatrix generator{Eigen::MatrixXd::Zero(1, 1)};
    ConvexBox control_box;
    Coefficients coeffs;
    std::vector<double> control_kinks; // shared across control coordinates

    // Constants used by validation spot checks only.
    double lipschitz_bound = 10.0;   // K in the b/sigma Lipschitz check
    double cost_growth_k1 = 50.0;    // K1 in the running-cost growth check
    double cost_growth_k2 = 10.0;    // K2 in the running-cost growth check
};

/// Inputs a control rule may look at when emitting the value used on
/// [t_j, t_{j+1}): the clock, the current state and the regime left limit
/// alpha(t_j-), plus the path/step indices so that seeded open-loop grids are
/// expressible. Nothing from the future is available by construction.
struct ControlContext {
    std::size_t path_index = 0;
    int step = 0;
    double t = 0.0;
    const VectorXd* state = nullptr;
    int regime_left = 0;
};

/// Named control rule. Values outside the box are a hard error unless
/// projection is requested.
struct ControlSpec {
    std::string name;
    std::function<VectorXd(const ControlContext&)> rule;
    bool project_into_box = false;

    static ControlSpec constant(std::string name, VectorXd value);
    static ControlSpec constant(std::string name, double value);
};

/// Per-regime scalar coefficient family (state, Brownian motion and control
/// all one-dimensional):
///   drift      = c0 + cx * x + cu * u
///   diffusion  = c0 + cx * x + cu * u + cabs * |u|
///   running f  = c0 + cx * x + cu * u + cxx * x^2 + cuu * u^2 + cabs * |u|
///   terminal h = c0 + cx * x + cxx * x^2
/// This is the family the JSON config accepts; richer coefficients are a
/// library-level feature via raw callables.
struct ScalarAffineQuadratic {
    double c0 = 0.0;
    double cx = 0.0;
    double cu = 0.0;
    double cxx = 0.0;
    double cuu = 0.0;
    double cabs = 0.0;
};

struct ScalarRegimeCoefficients {
    ScalarAffineQuadratic drift;        // cxx, cuu, cabs unused
    ScalarAffineQuadratic diffusion;    // cxx, cuu unused
    ScalarAffineQuadratic running_cost;
    ScalarAffineQuadratic terminal_cost; // cu, cuu, cabs unused
};

/// Assembles a ProblemSpec (n = m = k = 1) from per-regime scalar
/// coefficients. Declares the kink at u = 0 automatically when any |u| term
/// is present.
ProblemSpec make_scalar_problem(const GeneratorMatrix& generator, double horizon, double x0,
                                int initial_regime, const ConvexBox& control_box,
                                std::vector<ScalarRegimeCoefficients> regimes);

/// Control-problem Hamiltonian assembled from the coefficient callables:
/// -f(t,x,u,i) + drift(t,x,u,i)' p + tr(diffusion(t,x,u,i)' q).
double hamiltonian_value(const ProblemSpec& spec, double t, const VectorXd& x, const VectorXd& u,
                         int regime, const VectorXd& p, const MatrixXd& q);

/// One finding of the problem validator.
struct ValidationIssue {
    std::string check;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    int probes = 0;
    bool ok() const { return issues.empty(); }
};

/// Spot-checks the standing assumptions on random probes: Lipschitz bounds
/// for drift/diffusion in (x, u), declared-gradient consistency against
/// central finite differences, the running-cost growth bound and finiteness
/// of every coefficient.
ValidationReport validate_problem(const ProblemSpec& spec, int probes, std::uint64_t seed);

} // namespace smpkit
