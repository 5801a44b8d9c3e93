#pragma once

#include <cmath>
#include <cstdint>

namespace ocnav {

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    double r = std::remainder(a, 2.0 * kPi);
    if (r <= -kPi) r = kPi;
    return r;
}

/// Counter-based deterministic RNG (splitmix64). Streams derived from a seed
/// are stable across platforms, unlike <random> distributions.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    /// Uniform in [-limit, limit].
    double symmetric(double limit) { return uniform(-limit, limit); }
};

/// Derives an independent stream seed from (seed, index) pairs, so that
/// parallel loops can draw per-item randomness in any order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    Rng r(seed ^ (0x632be59bd9b4e019ull * (index + 1)));
    return r.next_u64();
}

}  // namespace ocnav
