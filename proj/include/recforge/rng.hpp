#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace recforge {

// Deterministic RNG with explicit transforms. std::normal_distribution and
// std::uniform_int_distribution are implementation-defined, so seeds would
// not reproduce across standard libraries; these transforms pin the stream.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(splitmix(seed ^ 0x5bd1e9955bd1e995ULL)) {}

    std::uint64_t next_u64() {
        // xorshift64* on a splitmix-expanded seed
        std::uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1DULL;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, bound).
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % bound;
    }

    // Box-Muller, one draw per call (no cached pair, keeps the stream simple).
    double next_gaussian(double mean, double stddev) {
        double u1 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double u2 = next_unit();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        return mean + stddev * z;
    }

    // Independent substream for (seed, stream) pairs.
    static Rng fork(std::uint64_t seed, std::uint64_t stream) {
        return Rng(splitmix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1)));
    }

  private:
    static std::uint64_t splitmix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace recforge
