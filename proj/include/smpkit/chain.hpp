#pragma once

#include <Eigen/Dense>
#include <vector>

#include "smpkit/rng.hpp"

namespace smpkit {

/// Transition-rate matrix of a continuous-time finite-state Markov chain.
/// Off-diagonal entries are nonnegative rates, every row sums to zero.
/// Rows of zeros (absorbing states) are allowed.
class GeneratorMatrix {
public:
    explicit GeneratorMatrix(Eigen::MatrixXd rates);

    int num_regimes() const { return static_cast<int>(rates_.rows()); }
    double rate(int from, int to) const { return rates_(from, to); }
    /// Total intensity of leaving `state`, i.e. -q_ii.
    double exit_rate(int state) const { return -rates_(state, state); }
    const Eigen::MatrixXd& rates() const { return rates_; }

private:
    Eigen::MatrixXd rates_;
};

struct RegimeJump {
    double time;
    int state;
};

/// Exact jump-time record of one chain trajectory on [0, horizon].
/// Jump times are kept as reals; queries distinguish the right-continuous
/// state alpha(t) from the left limit alpha(t-).
class RegimePath {
public:
    RegimePath(int initial_state, double horizon, std::vector<RegimeJump> jumps);

    int initial_state() const { return initial_state_; }
    double horizon() const { return horizon_; }
    const std::vector<RegimeJump>& jumps() const { return jumps_; }

    /// State at time t (state of the last jump at or before t).
    int state_at(double t) const;
    /// Left limit alpha(t-): state just before t (jumps strictly before t).
    int state_before(double t) const;

private:
    int initial_state_;
    double horizon_;
    std::vector<RegimeJump> jumps_;
};

/// Pair-indexed jump counts and per-state occupation times on [0, t].
struct CountingRecord {
    Eigen::MatrixXi jump_counts;      // entry (i,j): number of i->j transitions
    Eigen::VectorXd occupation_times; // Lebesgue time spent in each state

    /// Compensated count for the pair (i,j): N_ij(t) - q_ij * occupation_i(t).
    double compensated(const GeneratorMatrix& generator, int i, int j) const {
        return static_cast<double>(jump_counts(i, j)) -
               generator.rate(i, j) * occupation_times(i);
    }
};

/// Samples one trajectory exactly: exponential holding time with rate -q_ii,
/// then a jump to j with probability q_ij / (-q_ii). Absorbing states never
/// jump. The stream should come from derive_stream(seed, path, chain).
RegimePath simulate_chain(const GeneratorMatrix& generator, int initial_state, double horizon,
                          RngStream& stream);

/// Jump counts and occupation times of `path` restricted to [0, t].
CountingRecord counting_record(const RegimePath& path, const GeneratorMatrix& generator,
                               double t);

/// Transition-probability matrix exp(Q t).
Eigen::MatrixXd transition_probability(const GeneratorMatrix& generator, double t);

} // namespace smpkit
