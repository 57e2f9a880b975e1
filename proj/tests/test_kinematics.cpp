#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>

#include "zspring/kinematics.hpp"
#include "support/linsolve.hpp"
#include "support/tracks.hpp"

using namespace zspring;
using zspring_test::solve_linear;

namespace {

SampleTrack scalar_track(std::initializer_list<double> values, double dt = 1.0)
{
    SampleTrack track;
    track.dt = dt;
    for (const double v : values)
        track.positions.push_back(Vec3{v});
    return track;
}

/// Independent route: coefficients from the literal 4x4 constraint system.
CubicInterval solved_interval(const SampleTrack& track, std::size_t n)
{
    const std::array<std::array<double, 4>, 4> m{
        {{0, 0, 0, 1}, {0, 0, 1, 0}, {1, 1, 1, 1}, {3, 2, 1, 0}}};
    CubicInterval iv;
    const Vec3 d0 = central_difference(track, n);
    const Vec3 d1 = central_difference(track, n + 1);
    const auto solve_axis = [&](double x0, double x1, double dd0, double dd1) {
        return solve_linear<4>(m, {x0, dd0, x1, dd1});
    };
    const auto sx = solve_axis(track.positions[n].x, track.positions[n + 1].x, d0.x, d1.x);
    const auto sy = solve_axis(track.positions[n].y, track.positions[n + 1].y, d0.y, d1.y);
    const auto sz = solve_axis(track.positions[n].z, track.positions[n + 1].z, d0.z, d1.z);
    iv.q = {sx[0], sy[0], sz[0]};
    iv.a = {sx[1], sy[1], sz[1]};
    iv.b = {sx[2], sy[2], sz[2]};
    iv.c = {sx[3], sy[3], sz[3]};
    return iv;
}

} // namespace

TEST_CASE("central difference: constant, linear, and boundary rules")
{
    const SampleTrack constant = zspring_test::constant_track(5, 1.0, Vec3{3.0, -1.0, 2.0});
    for (std::size_t n = 0; n < 5; ++n)
        CHECK(central_difference(constant, n) == Vec3{});

    const Vec3 v{0.5, -2.0, 1.0};
    const SampleTrack linear = zspring_test::linear_track(6, 1.0, v);
    for (std::size_t n = 1; n + 1 < 6; ++n)
        CHECK(central_difference(linear, n) == v);
    CHECK(central_difference(linear, 0) == v);
    CHECK(central_difference(linear, 5) == v);

    const SampleTrack t = scalar_track({0.0, 1.0, 4.0});
    CHECK(central_difference(t, 1).x == 2.0); // (4 - 0)/2
    CHECK(central_difference(t, 0).x == 1.0); // one-sided
    CHECK(central_difference(t, 2).x == 3.0); // one-sided, mirrored at the end

    CHECK_THROWS_AS((void)central_difference(t, 3), std::out_of_range);
}

TEST_CASE("build_interval closed form")
{
    SUBCASE("constant track gives the constant curve")
    {
        const SampleTrack track = zspring_test::constant_track(4, 1.0, Vec3{2.0, 0.0, -1.0});
        const CubicInterval iv = build_interval(track, 1);
        CHECK(iv.q == Vec3{});
        CHECK(iv.a == Vec3{});
        CHECK(iv.b == Vec3{});
        CHECK(iv.c == Vec3(2.0, 0.0, -1.0));
    }
    SUBCASE("linear track is reproduced exactly on every interval")
    {
        const Vec3 v{1.0, -0.25, 2.0};
        const SampleTrack track = zspring_test::linear_track(5, 1.0, v);
        for (std::size_t n = 0; n + 1 < 5; ++n) {
            const CubicInterval iv = build_interval(track, n);
            CHECK(iv.q == Vec3{});
            CHECK(iv.a == Vec3{});
            CHECK(iv.b == v);
            CHECK(iv.c == track.positions[n]);
        }
    }
    SUBCASE("step track 0,0,1,1 interval 1")
    {
        // frozen from the independent 4x4 solve with d^1 = d^2 = 1/2
        const SampleTrack track = scalar_track({0.0, 0.0, 1.0, 1.0});
        const CubicInterval iv = build_interval(track, 1);
        CHECK(iv.c.x == doctest::Approx(0.0));
        CHECK(iv.b.x == doctest::Approx(0.5));
        CHECK(iv.a.x == doctest::Approx(1.5));
        CHECK(iv.q.x == doctest::Approx(-1.0));
        // all four constraint rows
        CHECK(iv.c.x == 0.0);                                             // position at s=0
        CHECK(iv.b.x == 0.5);                                             // slope at s=0
        CHECK(iv.q.x + iv.a.x + iv.b.x + iv.c.x == doctest::Approx(1.0)); // position at s=1
        CHECK(3 * iv.q.x + 2 * iv.a.x + iv.b.x == doctest::Approx(0.5));  // slope at s=1
    }
    SUBCASE("index errors")
    {
        const SampleTrack track = scalar_track({0.0, 1.0});
        CHECK_THROWS_AS((void)build_interval(track, 1), std::out_of_range);
        SampleTrack tiny;
        tiny.positions.push_back(Vec3{});
        CHECK_THROWS_AS((void)build_interval(tiny, 0), std::out_of_range);
    }
}

TEST_CASE("coefficients match an independent 4x4 solve on random tracks")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const SampleTrack track = zspring_test::random_track(12, 1.0 / 30.0, seed);
        for (std::size_t n = 0; n + 1 < track.size(); ++n) {
            const CubicInterval closed = build_interval(track, n);
            const CubicInterval solved = solved_interval(track, n);
            CAPTURE(seed);
            CAPTURE(n);
            REQUIRE(norm(closed.q - solved.q) <= 1e-12);
            REQUIRE(norm(closed.a - solved.a) <= 1e-12);
            REQUIRE(norm(closed.b - solved.b) <= 1e-12);
            REQUIRE(norm(closed.c - solved.c) <= 1e-12);
        }
    }
}

TEST_CASE("eval_target and eval_target_velocity")
{
    const CubicInterval constant{Vec3{}, Vec3{}, Vec3{}, Vec3{4.0, 4.0, 4.0}};
    CHECK(eval_target(constant, 0.3) == Vec3(4.0, 4.0, 4.0));
    CHECK(eval_target_velocity(constant, 0.3, 0.5) == Vec3{});

    const CubicInterval iv{Vec3{-0.5}, Vec3{1.0}, Vec3{0.5}, Vec3{0.0}};
    CHECK(eval_target(iv, 0.5).x == doctest::Approx(0.4375));
    CHECK(eval_target_velocity(iv, 1.0, 1.0).x == doctest::Approx(1.0));

    const Vec3 v{2.0, 0.0, -1.0};
    const SampleTrack linear = zspring_test::linear_track(4, 0.25, v);
    const CubicInterval liv = build_interval(linear, 1);
    for (const double s : {0.0, 0.25, 0.9})
        CHECK(norm(eval_target_velocity(liv, s, linear.dt) - v / linear.dt) <= 1e-12);
}

TEST_CASE("interpolation and C0/C1 continuity on random unit-scale tracks")
{
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const SampleTrack track = zspring_test::random_track(10, 1.0 / 30.0, seed);
        for (std::size_t n = 0; n + 1 < track.size(); ++n) {
            const CubicInterval iv = build_interval(track, n);
            REQUIRE(norm(eval_target(iv, 0.0) - track.positions[n]) <= 1e-12);
            REQUIRE(norm(eval_target(iv, 1.0) - track.positions[n + 1]) <= 1e-12);
        }
        for (std::size_t n = 0; n + 2 < track.size(); ++n) {
            const CubicInterval left = build_interval(track, n);
            const CubicInterval right = build_interval(track, n + 1);
            REQUIRE(norm(eval_target(left, 1.0) - eval_target(right, 0.0)) <= 1e-12);
            REQUIRE(norm(eval_target_velocity(left, 1.0, track.dt)
                         - eval_target_velocity(right, 0.0, track.dt))
                    <= 1e-12 / track.dt);
        }
    }
}
