#pragma once

#include <cmath>
#include <cstdint>

namespace smpkit {

/// SplitMix64 step. Used both as a stand-alone mixer and to expand seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ with SplitMix64 seeding. Self-contained so that streams are
/// bit-identical across platforms and standard-library versions.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Exponential holding time with the given rate (> 0).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    /// Standard normal via Box-Muller; the second draw of each pair is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925287 * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Independent random-number roles consumed while simulating one path.
/// Keeping the regime chain on its own substream means two runs that share a
/// (seed, path index) pair see identical chain and Brownian draws even when
/// their controls differ, which is what common-random-number comparisons need.
enum class StreamRole : std::uint32_t {
    chain = 0,
    brownian = 1,
    probe = 2,
};

/// Splittable derivation of a per-path, per-role stream from the master seed.
/// stream(seed, path, role) = xoshiro256++ seeded with
/// splitmix64(splitmix64(seed ^ GOLDEN*(path+1)) ^ WEYL*(role+1)); serial and
/// parallel schedules therefore agree bit-for-bit.
inline RngStream derive_stream(std::uint64_t master_seed, std::uint64_t path_index,
                               StreamRole role) {
    std::uint64_t h = master_seed ^ (0x9E3779B97F4A7C15ULL * (path_index + 1));
    std::uint64_t mixed = splitmix64(h);
    std::uint64_t g = mixed ^ (0xBF58476D1CE4E5B9ULL * (static_cast<std::uint64_t>(role) + 1));
    return RngStream(splitmix64(g));
}

} // namespace smpkit
