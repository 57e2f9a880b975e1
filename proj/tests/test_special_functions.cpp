#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "zspring/special_functions.hpp"
#include "support/reference.hpp"

using namespace zspring;
using zspring_test::ref_cosh_e;
using zspring_test::ref_h_over;
using zspring_test::ref_h_under;
using zspring_test::ref_sinc;
using zspring_test::ref_sinhc;

namespace {

double rel_err(double value, long double reference)
{
    const long double denom = std::max(std::fabs(reference), 1e-300L);
    return static_cast<double>(std::fabs(static_cast<long double>(value) - reference) / denom);
}

} // namespace

TEST_CASE("limits at eps = 0 are exact")
{
    CHECK(cosh_e(0.0) == 1.0);
    CHECK(sinhc(0.0) == 1.0);
    CHECK(sinc_e(0.0) == 1.0);
    CHECK(h_over(0.0) == 1.0 / 3.0);
    CHECK(h_under(0.0) == 1.0 / 3.0);
}

TEST_CASE("point values against the extended-precision oracle")
{
    // frozen from the long double reference (tests/support/reference.hpp)
    CHECK(cosh_e(1.0) == doctest::Approx(1.5430806348152438).epsilon(1e-15));
    CHECK(cosh_e(10.0) == doctest::Approx(11013.232920103323).epsilon(1e-15));
    CHECK(sinhc(2.0) == doctest::Approx(1.8134302039235094).epsilon(1e-15));
    CHECK(sinc_e(1.0) == doctest::Approx(0.84147098480789651).epsilon(1e-15));
    // at eps = 1 the (eps-1) term vanishes and h_over reduces to exactly 1/e
    CHECK(h_over(1.0) == doctest::Approx(0.36787944117144232).epsilon(1e-15));
    CHECK(h_under(1.5707963267948966) == doctest::Approx(0.25801227546559592).epsilon(1e-15));
}

TEST_CASE("tiny-argument behavior")
{
    CHECK(sinhc(1e-8) == doctest::Approx(1.0).epsilon(1e-16));
    CHECK(std::fabs(sinc_e(3.14159265358979323846)) <= 1e-15);
    CHECK(rel_err(h_over(1e-4), 1.0L / 3.0L + 1e-8L / 30.0L) <= 1e-12);
    CHECK(rel_err(h_under(1e-4), 1.0L / 3.0L - 1e-8L / 30.0L) <= 1e-12);
}

TEST_CASE("dense sweep over [0, 50] stays within 1e-12 of the oracle")
{
    for (int i = 0; i <= 20000; ++i) {
        const double eps = 50.0 * i / 20000.0;
        CAPTURE(eps);
        REQUIRE(rel_err(cosh_e(eps), ref_cosh_e(eps)) <= 1e-12);
        REQUIRE(rel_err(sinhc(eps), ref_sinhc(eps)) <= 1e-12);
        REQUIRE(rel_err(sinc_e(eps), ref_sinc(eps)) <= 1e-12);
        REQUIRE(rel_err(h_over(eps), ref_h_over(eps)) <= 1e-12);
        REQUIRE(rel_err(h_under(eps), ref_h_under(eps)) <= 1e-12);
    }
}

TEST_CASE("sinhc stays within 4 ulp of the oracle")
{
    for (int i = 0; i <= 200000; ++i) {
        const double eps = 50.0 * i / 200000.0;
        const double value = sinhc(eps);
        const double ulp = std::scalbn(std::nexttoward(1.0, 2.0L) - 1.0, std::ilogb(value));
        CAPTURE(eps);
        REQUIRE(static_cast<double>(std::fabs(value - ref_sinhc(eps))) <= 4.0 * ulp);
    }
}

TEST_CASE("dense sweep across each series crossover")
{
    for (int i = 0; i <= 4000; ++i) {
        const double f = 0.5 + 1.5 * i / 4000.0; // [0.5, 2.0] x threshold
        {
            const double eps = f * k_sinhc_series_threshold;
            CAPTURE(eps);
            REQUIRE(rel_err(sinhc(eps), ref_sinhc(eps)) <= 1e-12);
            REQUIRE(rel_err(sinc_e(eps), ref_sinc(eps)) <= 1e-12);
        }
        {
            const double eps = f * k_hfun_series_threshold;
            CAPTURE(eps);
            REQUIRE(rel_err(h_over(eps), ref_h_over(eps)) <= 1e-12);
            REQUIRE(rel_err(h_under(eps), ref_h_under(eps)) <= 1e-12);
        }
    }
}

TEST_CASE("series and direct branches agree through the crossover band")
{
    // both branches evaluated explicitly, independent of the dispatch
    for (int i = 0; i <= 2000; ++i) {
        const double f = 0.5 + 1.5 * i / 2000.0;
        {
            const double e = f * k_sinhc_series_threshold;
            const double e2 = e * e;
            const double series = 1.0 + e2 / 6.0 + e2 * e2 / 120.0;
            REQUIRE(std::fabs(series - std::sinh(e) / e) <= 1e-12 * series);
            const double series_sin = 1.0 - e2 / 6.0 + e2 * e2 / 120.0;
            REQUIRE(std::fabs(series_sin - std::sin(e) / e) <= 1e-12 * series_sin);
        }
        {
            // below ~0.85x the crossover the direct form's cancellation alone
            // exceeds 1e-12, which is what motivates the series branch
            const double e = (0.85 + 1.15 * i / 2000.0) * k_hfun_series_threshold;
            const double e2 = e * e;
            const double so = 1.0 / 3.0 + e2 / 30.0 + e2 * e2 / 840.0 + e2 * e2 * e2 / 45360.0;
            REQUIRE(std::fabs(so - (e * std::cosh(e) - std::sinh(e)) / (e2 * e)) <= 1e-12 * so);
            const double su = 1.0 / 3.0 - e2 / 30.0 + e2 * e2 / 840.0 - e2 * e2 * e2 / 45360.0;
            REQUIRE(std::fabs(su - (std::sin(e) - e * std::cos(e)) / (e2 * e)) <= 1e-12 * su);
        }
    }
}

TEST_CASE("monotone-continuous over [0, 50]: finite, no jumps beyond local slope")
{
    const double step = 1e-3;
    double prev[5] = {cosh_e(0.0), sinhc(0.0), sinc_e(0.0), h_over(0.0), h_under(0.0)};
    for (int i = 1; i <= 50000; ++i) {
        const double eps = step * i;
        const double cur[5] = {cosh_e(eps), sinhc(eps), sinc_e(eps), h_over(eps), h_under(eps)};
        for (int k = 0; k < 5; ++k) {
            CAPTURE(eps);
            CAPTURE(k);
            REQUIRE(std::isfinite(cur[k]));
            // slope of each function is bounded by ~(|f| + |f_neighbor| + 1)
            REQUIRE(std::fabs(cur[k] - prev[k])
                    <= 1.05 * step * (std::fabs(cur[k]) + std::fabs(prev[k]) + 1.0));
            prev[k] = cur[k];
        }
    }
}

TEST_CASE("range properties")
{
    for (int i = 0; i <= 5000; ++i) {
        const double eps = 50.0 * i / 5000.0;
        REQUIRE(sinhc(eps) >= 1.0);
        REQUIRE(cosh_e(eps) >= 1.0);
    }
    for (int i = 0; i <= 5000; ++i) {
        const double eps = 3.14159265358979323846 * i / 5000.0;
        REQUIRE(sinc_e(eps) > 0.0);
        REQUIRE(sinc_e(eps) <= 1.0);
    }
}
