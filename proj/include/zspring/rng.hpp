#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "zspring/vec3.hpp"

namespace zspring::detail {

// Hand-rolled draws on top of mt19937_64. The standard distributions are not
// pinned across library implementations; these are, which keeps seeded runs
// reproducible everywhere.

using Rng = std::mt19937_64;

/// Uniform in [0, 1) with 53 random bits.
[[nodiscard]] inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

[[nodiscard]] inline double uniform(Rng& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal via Box-Muller.
[[nodiscard]] inline double normal(Rng& rng)
{
    const double u1 = 1.0 - uniform01(rng); // (0, 1]
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

/// Uniform integer in [0, n).
[[nodiscard]] inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n)
{
    // modulo bias is irrelevant at the population/frame counts used here
    return rng() % n;
}

/// Isotropic random direction.
[[nodiscard]] inline Vec3 unit_vector(Rng& rng)
{
    for (;;) {
        const Vec3 v{normal(rng), normal(rng), normal(rng)};
        const double n = norm(v);
        if (n > 1e-12)
            return v / n;
    }
}

/// Decorrelates per-particle streams derived from one user seed.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace zspring::detail
