#pragma once

#include <cmath>

namespace zspring {

// Scalar functions of the unitless eps >= 0 that appear in the closed-form
// spring solutions and their eps-derivatives. Each one that suffers floating
// point cancellation near eps = 0 is evaluated by a short Taylor series below
// a fixed crossover so the eps -> 0 limits come out exact. Thresholds are
// chosen so series truncation stays below 1e-12 relative while the direct
// formula's cancellation would exceed that.

inline constexpr double k_sinhc_series_threshold = 1e-2;
inline constexpr double k_sinc_series_threshold = 1e-2;
inline constexpr double k_hfun_series_threshold = 5e-2;

/// (e^eps + e^-eps)/2. cosh has no cancellation issue; kept here so all five
/// basis functions live together. Exactly 1 at eps = 0.
[[nodiscard]] inline double cosh_e(double eps) noexcept
{
    return std::cosh(eps);
}

/// sinh(eps)/eps, the hyperbolic sine cardinal. Exactly 1 at eps = 0.
[[nodiscard]] inline double sinhc(double eps) noexcept
{
    const double e2 = eps * eps;
    if (eps < k_sinhc_series_threshold) {
        // 1 + x^2/6 + x^4/120; truncation ~x^6/5040 < 2e-16 at the threshold
        return 1.0 + e2 / 6.0 + (e2 * e2) / 120.0;
    }
    return std::sinh(eps) / eps;
}

/// sin(eps)/eps. Exactly 1 at eps = 0.
[[nodiscard]] inline double sinc_e(double eps) noexcept
{
    const double e2 = eps * eps;
    if (eps < k_sinc_series_threshold) {
        return 1.0 - e2 / 6.0 + (e2 * e2) / 120.0;
    }
    return std::sin(eps) / eps;
}

/// ((eps-1)e^eps + (eps+1)e^-eps) / (2 eps^3), the eps-derivative kernel of
/// the overdamped transient. Evaluated as (eps*cosh(eps) - sinh(eps))/eps^3,
/// which is the same expression with the benign halves pre-combined; the
/// literal two-exponential form loses ~5e-12 to cancellation right above the
/// series crossover. Exactly 1/3 at eps = 0.
[[nodiscard]] inline double h_over(double eps) noexcept
{
    const double e2 = eps * eps;
    if (eps < k_hfun_series_threshold) {
        // 1/3 + x^2/30 + x^4/840 + x^6/45360
        return 1.0 / 3.0 + e2 / 30.0 + (e2 * e2) / 840.0 + (e2 * e2 * e2) / 45360.0;
    }
    return (eps * std::cosh(eps) - std::sinh(eps)) / (e2 * eps);
}

/// (sin(eps) - eps*cos(eps)) / eps^3, the underdamped counterpart of h_over.
/// Exactly 1/3 at eps = 0.
[[nodiscard]] inline double h_under(double eps) noexcept
{
    const double e2 = eps * eps;
    if (eps < k_hfun_series_threshold) {
        return 1.0 / 3.0 - e2 / 30.0 + (e2 * e2) / 840.0 - (e2 * e2 * e2) / 45360.0;
    }
    return (std::sin(eps) - eps * std::cos(eps)) / (e2 * eps);
}

} // namespace zspring
