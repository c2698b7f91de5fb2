#pragma once

#include <cstdint>
#include <vector>

#include "smpkit/problem.hpp"

namespace smpkit {

/// One simulated trajectory on the uniform grid. Rows of `states` are the
/// grid nodes (N+1 of them); `controls` and `brownian_increments` have one
/// row per step. The regime path keeps its exact jump times.
struct PathSample {
    RegimePath regime;
    MatrixXd brownian_increments; // N x m
    MatrixXd states;              // (N+1) x n
    MatrixXd controls;            // N x k
};

/// A batch of trajectories sharing one grid.
struct PathBundle {
    Eigen::VectorXd grid; // N+1 nodes, 0 = t_0 < ... < t_N = horizon
    std::vector<PathSample> paths;

    int steps() const { return static_cast<int>(grid.size()) - 1; }
    int path_count() const { return static_cast<int>(paths.size()); }
    double dt() const { return grid(1) - grid(0); }
};

struct SimOptions {
    int steps = 200;
    int paths = 10000;
    std::uint64_t seed = 42;
    int threads = 1;
    double blowup_guard = 1e8;
};

/// Simulates a single path with the Euler-Maruyama left-point scheme
///   x_{j+1} = x_j + b(t_j, x_j, u_j, a_j) dt + sigma(t_j, x_j, u_j, a_j) dW_j
/// where a_j = alpha(t_j-) comes from an exactly-sampled regime path. The
/// chain and Brownian draws use separate substreams of (seed, path_index) so
/// that runs with different controls share their noise.
PathSample simulate_path(const ProblemSpec& spec, const ControlSpec& control, int steps,
                         std::uint64_t seed, std::size_t path_index, double blowup_guard = 1e8);

/// Simulates and stores a full bundle; path-parallel and bit-reproducible for
/// any thread count.
PathBundle simulate_forward(const ProblemSpec& spec, const ControlSpec& control,
                            const SimOptions& options);

struct CostEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int paths = 0;
};

/// Left-point Riemann sum of the running cost plus the terminal cost of one
/// stored path.
double path_cost(const ProblemSpec& spec, const PathSample& sample, const Eigen::VectorXd& grid);

/// Monte Carlo cost of a stored bundle.
CostEstimate estimate_cost(const ProblemSpec& spec, const PathBundle& bundle);

/// Monte Carlo cost without storing paths; identical numbers to simulating a
/// bundle with the same options and calling estimate_cost.
CostEstimate estimate_cost_streaming(const ProblemSpec& spec, const ControlSpec& control,
                                     const SimOptions& options);

/// sup over grid nodes of E|x1(t) - x2(t)|^4 divided by the grid L^4 norm
/// ||u1 - u2||^4, with both state processes driven by common random numbers.
/// Throws DomainError when the controls coincide on the grid.
double lipschitz_ratio_probe(const ProblemSpec& spec, const ControlSpec& control_a,
                             const ControlSpec& control_b, const SimOptions& options);

} // namespace smpkit
