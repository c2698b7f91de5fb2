#include "smpkit/chain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "smpkit/errors.hpp"

namespace smpkit {

GeneratorMatrix::GeneratorMatrix(Eigen::MatrixXd rates) : rates_(std::move(rates)) {
    if (rates_.rows() < 1 || rates_.rows() != rates_.cols())
        throw ConfigError("generator matrix must be square with at least one state");
    const int d = static_cast<int>(rates_.rows());
    for (int i = 0; i < d; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < d; ++j) {
            const double q = rates_(i, j);
            if (!std::isfinite(q))
                throw ConfigError("generator entry (" + std::to_string(i) + "," +
                                  std::to_string(j) + ") is not finite");
            if (i != j && q < 0.0)
                throw ConfigError("generator off-diagonal entry (" + std::to_string(i) + "," +
                                  std::to_string(j) + ") is negative");
            row_sum += q;
        }
        if (std::abs(row_sum) > 1e-12)
            throw ConfigError("generator row " + std::to_string(i) +
                              " does not sum to zero (sum = " + std::to_string(row_sum) + ")");
    }
}

RegimePath::RegimePath(int initial_state, double horizon, std::vector<RegimeJump> jumps)
    : initial_state_(initial_state), horizon_(horizon), jumps_(std::move(jumps)) {
    if (horizon_ <= 0.0) throw ConfigError("regime path horizon must be positive");
    double prev_time = 0.0;
    int prev_state = initial_state_;
    for (const auto& jump : jumps_) {
        if (!(jump.time > prev_time) || jump.time > horizon_)
            throw ConfigError("regime jump times must be strictly increasing in (0, horizon]");
        if (jump.state == prev_state)
            throw ConfigError("consecutive regime states must differ");
        prev_time = jump.time;
        prev_state = jump.state;
    }
}

int RegimePath::state_at(double t) const {
    int state = initial_state_;
    for (const auto& jump : jumps_) {
        if (jump.time <= t)
            state = jump.state;
        else
            break;
    }
    return state;
}

int RegimePath::state_before(double t) const {
    int state = initial_state_;
    for (const auto& jump : jumps_) {
        if (jump.time < t)
            state = jump.state;
        else
            break;
    }
    return state;
}

RegimePath simulate_chain(const GeneratorMatrix& generator, int initial_state, double horizon,
                          RngStream& stream) {
    const int d = generator.num_regimes();
    if (initial_state < 0 || initial_state >= d)
        throw ConfigError("initial regime " + std::to_string(initial_state) + " outside [0, " +
                          std::to_string(d) + ")");
    if (!(horizon > 0.0)) throw ConfigError("chain horizon must be positive");

    std::vector<RegimeJump> jumps;
    double clock = 0.0;
    int state = initial_state;
    while (true) {
        const double intensity = generator.exit_rate(state);
        if (intensity <= 0.0) break; // absorbing state
        clock += stream.exponential(intensity);
        if (clock > horizon) break;
        // Embedded-chain draw: pick the destination proportional to q_ij.
        const double u = stream.uniform() * intensity;
        double acc = 0.0;
        int next = -1;
        for (int j = 0; j < d; ++j) {
            if (j == state) continue;
            acc += generator.rate(state, j);
            if (u < acc) {
                next = j;
                break;
            }
        }
        if (next < 0) { // guard against roundoff exhausting the partial sums
            for (int j = d - 1; j >= 0; --j) {
                if (j != state && generator.rate(state, j) > 0.0) {
                    next = j;
                    break;
                }
            }
        }
        jumps.push_back({clock, next});
        state = next;
    }
    return RegimePath(initial_state, horizon, std::move(jumps));
}

CountingRecord counting_record(const RegimePath& path, const GeneratorMatrix& generator,
                               double t) {
    if (t < 0.0 || t > path.horizon())
        throw DomainError("counting_record time " + std::to_string(t) + " outside [0, " +
                          std::to_string(path.horizon()) + "]");
    const int d = generator.num_regimes();
    CountingRecord record;
    record.jump_counts = Eigen::MatrixXi::Zero(d, d);
    record.occupation_times = Eigen::VectorXd::Zero(d);

    double segment_start = 0.0;
    int state = path.initial_state();
    for (const auto& jump : path.jumps()) {
        if (jump.time > t) break;
        record.occupation_times(state) += jump.time - segment_start;
        record.jump_counts(state, jump.state) += 1;
        segment_start = jump.time;
        state = jump.state;
    }
    record.occupation_times(state) += t - segment_start;
    return record;
}

Eigen::MatrixXd transition_probability(const GeneratorMatrix& generator, double t) {
    if (t < 0.0) throw DomainError("transition_probability requires t >= 0");
    const Eigen::MatrixXd scaled = generator.rates() * t;
    return scaled.exp();
}

} // namespace smpkit
