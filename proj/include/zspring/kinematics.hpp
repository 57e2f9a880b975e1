#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "zspring/vec3.hpp"

namespace zspring {

/// Uniformly spaced position samples of one particle's target curve.
struct SampleTrack {
    std::vector<Vec3> positions; // N >= 2
    double dt = 1.0;             // seconds between samples, > 0

    [[nodiscard]] std::size_t size() const { return positions.size(); }
    [[nodiscard]] std::size_t interval_count() const
    {
        return positions.empty() ? 0 : positions.size() - 1;
    }
};

/// Reference positions a fit is matched against, aligned frame-for-frame
/// with a SampleTrack (same count, same dt).
struct GroundTruthTrack {
    std::vector<Vec3> positions;

    [[nodiscard]] std::size_t size() const { return positions.size(); }
};

/// Cubic coefficients of one inter-sample interval, powers of dt absorbed:
/// xhat(s) = q s^3 + a s^2 + b s + c with s in [0,1].
struct CubicInterval {
    Vec3 q, a, b, c;
};

/// Sample derivative estimate in units of "length per sample step": the
/// central difference (x[n+1]-x[n-1])/2 at interior samples, falling back to
/// the one-sided difference at both ends of the track.
[[nodiscard]] inline Vec3 central_difference(std::span<const Vec3> positions, std::size_t n)
{
    const std::size_t count = positions.size();
    if (n >= count || count < 2)
        throw std::out_of_range("central_difference: sample index out of range");
    if (n == 0)
        return positions[1] - positions[0];
    if (n == count - 1)
        return positions[count - 1] - positions[count - 2];
    return 0.5 * (positions[n + 1] - positions[n - 1]);
}

[[nodiscard]] inline Vec3 central_difference(const SampleTrack& track, std::size_t n)
{
    return central_difference(std::span<const Vec3>(track.positions), n);
}

/// Builds the C1 cubic over [t^n, t^n+1]. Closed-form solution of the 4x4
/// position/derivative constraint system:
///   c = x^n, b = d^n, a = 3(x^n+1 - x^n) - 2 d^n - d^n+1,
///   q = 2(x^n - x^n+1) + d^n + d^n+1.
[[nodiscard]] inline CubicInterval build_interval(std::span<const Vec3> positions, std::size_t n)
{
    if (positions.size() < 2 || n >= positions.size() - 1)
        throw std::out_of_range("build_interval: interval index out of range");
    const Vec3& x0 = positions[n];
    const Vec3& x1 = positions[n + 1];
    const Vec3 d0 = central_difference(positions, n);
    const Vec3 d1 = central_difference(positions, n + 1);
    CubicInterval iv;
    iv.c = x0;
    iv.b = d0;
    iv.a = 3.0 * (x1 - x0) - 2.0 * d0 - d1;
    iv.q = 2.0 * (x0 - x1) + d0 + d1;
    return iv;
}

[[nodiscard]] inline CubicInterval build_interval(const SampleTrack& track, std::size_t n)
{
    return build_interval(std::span<const Vec3>(track.positions), n);
}

/// Target position at local parameter s in [0,1].
[[nodiscard]] inline Vec3 eval_target(const CubicInterval& iv, double s) noexcept
{
    return ((iv.q * s + iv.a) * s + iv.b) * s + iv.c;
}

/// Target velocity dxhat/dt = (3 q s^2 + 2 a s + b)/dt.
[[nodiscard]] inline Vec3 eval_target_velocity(const CubicInterval& iv, double s, double dt) noexcept
{
    return ((3.0 * iv.q * s + 2.0 * iv.a) * s + iv.b) / dt;
}

} // namespace zspring
