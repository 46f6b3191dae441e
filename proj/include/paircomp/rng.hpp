#pragma once

#include <cmath>
#include <cstdint>

#include "paircomp/math.hpp"

namespace paircomp {

// Generator: xoshiro256** 1.0 (Blackman & Vigna), seeded through splitmix64.
// Fixed here and in the docs so that published fixtures stay valid; the std
// engines/distributions are avoided because their output is not specified
// bit-for-bit across implementations.
inline constexpr const char* kRngName = "xoshiro256starstar-1.0";

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derives the seed of replication stream r from a base seed.
/// Documented mix: splitmix64 over (base, r) so that distinct (base, r)
/// pairs land in unrelated stream states.
inline std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t stream) {
    std::uint64_t s = base_seed;
    const std::uint64_t a = splitmix64(s);
    s = stream ^ 0x6A09E667F3BCC909ULL;
    const std::uint64_t b = splitmix64(s);
    s = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
    return splitmix64(s);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x853C49E6748FEA9BULL) { reseed(seed); }

    Rng(std::uint64_t base_seed, std::uint64_t stream) {
        reseed(stream_seed(base_seed, stream));
    }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
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
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (one draw per pair of uniforms; the
    /// second variate is discarded to keep the stream stateless).
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Binomial(t, p) by inverse CDF over the pmf; t is small by design.
    int binomial(int t, double p) {
        if (p <= 0.0) return 0;
        if (p >= 1.0) return t;
        const double u = uniform();
        double pmf = std::pow(1.0 - p, t);
        double cdf = pmf;
        int k = 0;
        while (k < t && u >= cdf) {
            pmf *= (static_cast<double>(t - k) / (k + 1)) * (p / (1.0 - p));
            cdf += pmf;
            ++k;
        }
        return k;
    }

    /// Number of consecutive failures before the next success of a
    /// Bernoulli(q) sequence. Returns -1 when q == 0 (no success ever).
    std::int64_t geometric_skip(double q) {
        if (q <= 0.0) return -1;
        if (q >= 1.0) return 0;
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return static_cast<std::int64_t>(std::floor(std::log(u) / std::log1p(-q)));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

}  // namespace paircomp
