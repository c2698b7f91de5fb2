#pragma once

#include <optional>
#include <string>
#include <vector>

#include "smpkit/adjoint.hpp"

namespace smpkit {

/// Hamiltonian interface for the checkers. `evaluator`, when set, is a
/// problem-specific closed form; it must agree with the coefficient assembly
/// (there is a probe test for that). Gradient intervals of u |-> -H come from
/// the coefficient one-sided control partials and the declared kinks.
struct HamiltonianSpec {
    const ProblemSpec* problem = nullptr;
    std::function<double(double, const VectorXd&, const VectorXd&, int, const VectorXd&,
                         const MatrixXd&)>
        evaluator; // optional override

    double value(double t, const VectorXd& x, const VectorXd& u, int regime, const VectorXd& p,
                 const MatrixXd& q) const {
        if (evaluator) return evaluator(t, x, u, regime, p, q);
        return hamiltonian_value(*problem, t, x, u, regime, p, q);
    }

    /// Per-coordinate generalized gradient of u_c |-> -H at u.
    Interval minus_h_gradient_coord(double t, const VectorXd& x, const VectorXd& u, int regime,
                                    const VectorXd& p, const MatrixXd& q, int coord,
                                    double snap_tol = 1e-12) const;
};

struct StepSummary {
    double t = 0.0;
    int pass_count = 0;
    double max_violation = 0.0;
};

/// Grid-level record of the stationarity condition 0 in d_u(-H) + N_U(u)
/// along a bundle: per-step aggregates, label counts per regime, and the
/// worst offender.
struct StationarityReport {
    double tol = 0.0;
    int steps = 0;
    int paths = 0;
    double pass_fraction = 0.0;
    bool all_pass = false;
    double max_violation = 0.0;
    int worst_step = -1;
    std::size_t worst_path = 0;
    std::vector<StepSummary> per_step;
    Eigen::MatrixXi label_counts; // regime x ActiveCase (5 columns)
};

struct NecessaryOptions {
    double tol = 1e-9;
    /// Add 3 * (|b_u| se_p + |sigma_u| se_q) per node when the adjoint
    /// carries regression standard errors.
    bool propagate_adjoint_error = true;
    double snap_tol = 1e-12;
    double boundary_tol = 1e-12;
};

/// Evaluates the stationarity condition at every (path, node) of the bundle
/// with the supplied adjoint values.
StationarityReport check_necessary(const ProblemSpec& spec, const HamiltonianSpec& hamiltonian,
                                   const AdjointValues& adjoint, const PathBundle& bundle,
                                   const NecessaryOptions& options);

/// Witness of a failed midpoint probe.
struct ProbeWitness {
    double t = 0.0;
    int regime = 0;
    VectorXd x1, u1, x2, u2;
    VectorXd p;
    MatrixXd q;
    double margin = 0.0; // positive = violation size
};

struct SufficiencyReport {
    bool terminal_convex = false;
    bool hamiltonian_concave = false;
    bool verdict = false;
    double worst_convexity_margin = 0.0; // most positive violation observed
    double worst_concavity_margin = 0.0;
    std::optional<ProbeWitness> concavity_witness;
    int probes = 0;
};

/// Randomized midpoint probes of the two hypotheses behind sufficiency:
/// convexity of the terminal cost per regime and concavity of
/// (x, u) |-> H(t, x, u, alpha, p, q) at sampled nodes.
SufficiencyReport check_sufficient(const ProblemSpec& spec, const HamiltonianSpec& hamiltonian,
                                   const AdjointValues& adjoint, const PathBundle& bundle,
                                   int probes, std::uint64_t seed);

struct ControlCost {
    std::string name;
    double mean = 0.0;
    double std_error = 0.0;
    double gap_mean = 0.0; // alternative minus candidate, common random numbers
    double gap_std_error = 0.0;
    bool beats_candidate = false; // gap < -3 * gap_std_error
};

struct CostComparison {
    ControlCost candidate;
    std::vector<ControlCost> alternatives;
    bool candidate_best = false; // nothing beats the candidate by 3 joint SE
};

/// Common-random-number cost comparison of a candidate control against
/// alternatives: per-path cost gaps share chain and Brownian draws.
CostComparison compare_costs(const ProblemSpec& spec, const ControlSpec& candidate,
                             const std::vector<ControlSpec>& alternatives,
                             const SimOptions& options);

} // namespace smpkit
