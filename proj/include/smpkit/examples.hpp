#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>

#include "smpkit/smp.hpp"

namespace smpkit {

/// Built-in benchmark problems with closed-form reference objects.
enum class ExampleId { concave_41, nonsmooth_42, quadratic_loss_43, nonconcave_44 };

std::string example_id_name(ExampleId id);
std::optional<ExampleId> parse_example_id(const std::string& name);

/// Market data of the quadratic-loss problem (regime-constant coefficients).
/// Defaults keep the market price of risk bounded and nonzero in each regime;
/// they are inputs, not reference values.
struct QuadraticLossParams {
    Eigen::MatrixXd generator = (Eigen::MatrixXd(2, 2) << -1.0, 1.0, 1.0, -1.0).finished();
    VectorXd riskless_rate = (VectorXd(2) << 0.03, 0.05).finished();
    VectorXd stock_return = (VectorXd(2) << 0.08, 0.06).finished();
    VectorXd stock_vol = (VectorXd(2) << 0.2, 0.3).finished();
    double target = 1.0;
    double horizon = 1.0;
    double x0 = 1.0;
    int initial_regime = 0;
    double box_halfwidth = 10.0;
};

/// Two-regime switching rates for the nonconcave problem. The sum must be at
/// least 2 for the reference construction to apply.
struct RegimeSwitchParams {
    double q12 = 1.0;
    double q21 = 1.0;
};

/// An executable benchmark: the problem, its named candidate controls,
/// closed-form adjoints per candidate where available, ansatz curves for the
/// linear-quadratic cases, and per-case reference scalars.
struct ExampleCase {
    ExampleId id{};
    std::string name;
    ProblemSpec spec;
    std::vector<ControlSpec> candidates;

    /// Closed-form Hamiltonian (checked against the coefficient assembly).
    std::function<double(double, const VectorXd&, const VectorXd&, int, const VectorXd&,
                         const MatrixXd&)>
        hamiltonian_evaluator;

    /// candidate name -> analytic adjoint values over a bundle of that candidate
    std::map<std::string, std::function<AdjointValues(const PathBundle&)>> adjoint_builders;

    /// candidate name -> max |adaptedness residual| over (path, node), where the
    /// case defines one (a filtration side-condition specific to the problem)
    std::map<std::string,
             std::function<double(const PathBundle&, const AdjointValues&)>>
        adaptedness_residuals;

    bool has_ansatz = false;
    AnsatzSystem phi_system, psi_system;
    std::optional<AnsatzCurve> phi, psi;
    bool has_psi = false;

    /// Closed-form curve where one exists (regime-switching quadratic case).
    std::function<double(double, int)> phi_closed_form;

    std::optional<double> optimal_cost; // exact optimal cost where known
    std::string optimal_candidate;      // name of the reference-optimal control
    std::vector<ControlSpec> comparison_alternatives;

    const ControlSpec& candidate(const std::string& name) const;
    HamiltonianSpec hamiltonian() const { return HamiltonianSpec{&spec, hamiltonian_evaluator}; }
    AdjointValues analytic_adjoint(const std::string& candidate_name,
                                   const PathBundle& bundle) const;
};

ExampleCase build_example(ExampleId id);
ExampleCase build_example_quadratic_loss(const QuadraticLossParams& params);
ExampleCase build_example_nonconcave(const RegimeSwitchParams& params);

struct RunNumerics {
    int steps = 200;
    int paths = 10000;
    double ode_step = 1e-3;
    int picard_iters = 20;
    double tol_stat = 1e-9;
    bool tol_auto = false;
    double tol_ode = 1e-8;
    int threads = 1;
};

/// Full orchestration of one example: simulate the candidates, attach their
/// adjoints, run the stationarity and sufficiency checkers, compare costs and
/// diff everything against the case's reference objects. The returned JSON
/// carries a named check list and an overall flag.
nlohmann::json run_example(const ExampleCase& example, const RunNumerics& numerics,
                           std::uint64_t seed);

/// Deterministic +/-1 grid pattern used by the sign-mixing candidate and the
/// jitter perturbations.
double sign_hash(std::uint64_t salt, std::uint64_t path_index, int step);

} // namespace smpkit
