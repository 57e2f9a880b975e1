#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "zspring/kinematics.hpp"
#include "zspring/special_functions.hpp"
#include "zspring/vec3.hpp"

namespace zspring {

/// Per-particle spring constants, already divided by the particle mass:
/// ks in 1/s^2 (> 0), kd in 1/s (>= 0).
struct SpringParams {
    double ks = 1.0;
    double kd = 0.0;

    /// kd^2 - 4 ks, the characteristic-equation discriminant.
    [[nodiscard]] double discriminant() const noexcept { return kd * kd - 4.0 * ks; }
};

enum class DampingKind { overdamped, underdamped, critical };

struct DampingRegime {
    DampingKind kind = DampingKind::critical;
    double omega2 = 0.0; // |kd^2 - 4 ks|
};

/// Relative tolerance on kd^2 - 4 ks (scaled by 4 ks) inside which a
/// parameter set is labeled critically damped. Labeling only; evaluation
/// branches on the exact discriminant sign (see detail::scaled_basis), and
/// the guarded basis functions keep the branches in agreement far beyond
/// this band anyway.
inline constexpr double k_regime_tol = 1e-9;

[[nodiscard]] inline DampingRegime classify(const SpringParams& params, double tol = k_regime_tol) noexcept
{
    const double d = params.discriminant();
    const double band = tol * 4.0 * params.ks;
    DampingRegime regime;
    regime.omega2 = std::fabs(d);
    if (d > band)
        regime.kind = DampingKind::overdamped;
    else if (d < -band)
        regime.kind = DampingKind::underdamped;
    else
        regime.kind = DampingKind::critical;
    return regime;
}

/// Position and velocity of one simulated particle.
struct ParticleState {
    Vec3 x, v;
};

/// Transient coefficients of one interval: g1 = x^n - p(t^n),
/// g2 = v^n + (kd/2) g1 - pdot(t^n).
struct Gammas {
    Vec3 g1, g2;
};

struct ParticularValue {
    Vec3 p, pdot;
};

/// Particular (target-tracking) component of the closed-form solution:
///   p    = xhat(s) - (6 q s + 2 a)/(ks dt^2) + 6 kd q/(ks^2 dt^3)
///   pdot = xhat'(s)/dt - 6 q/(ks dt^3)
[[nodiscard]] inline ParticularValue particular(const CubicInterval& iv, const SpringParams& params,
                                                double s, double dt) noexcept
{
    const double dt2 = dt * dt;
    const double dt3 = dt2 * dt;
    ParticularValue out;
    out.p = eval_target(iv, s) - (6.0 * iv.q * s + 2.0 * iv.a) / (params.ks * dt2)
            + (6.0 * params.kd / (params.ks * params.ks * dt3)) * iv.q;
    out.pdot = eval_target_velocity(iv, s, dt) - (6.0 / (params.ks * dt3)) * iv.q;
    return out;
}

[[nodiscard]] inline Gammas gammas(const ParticleState& state, const CubicInterval& iv,
                                   const SpringParams& params, double dt) noexcept
{
    const ParticularValue p0 = particular(iv, params, 0.0, dt);
    Gammas g;
    g.g1 = state.x - p0.p;
    g.g2 = state.v + (0.5 * params.kd) * g.g1 - p0.pdot;
    return g;
}

namespace detail {

/// Transient basis with the decay factor e^(-kd tau/2) folded in:
///   ec = E*C, es = E*S, eh = E*H
/// where (C, S, H) are (cosh_e, sinhc, h_over) of eps (overdamped),
/// (cos, sinc_e, h_under) (underdamped), or their shared limits (1, 1, 1/3)
/// (critical), and eps = (tau/2) sqrt(|kd^2 - 4 ks|).
///
/// The overdamped case combines exponents before evaluating: E*cosh(eps)
/// naively overflows once eps > ~700 even though the product is <= 1, and
/// E itself underflows for stiff kd * large tau while E*C stays order one.
/// All exponents here are <= 0, so any tau and any valid params stay finite.
///
/// Dispatch is on the exact sign of the discriminant: the guarded functions
/// hand over seamlessly at eps -> 0, and a tolerance band would place a flat
/// spot in the parameter dependence that finite differences across the
/// critical manifold would see. classify()'s banded tolerance is for regime
/// labeling, not for evaluation.
struct ScaledBasis {
    double ec = 1.0;
    double es = 1.0;
    double eh = 1.0 / 3.0;
    double w = 0.0; // discriminant as used by the velocity form; 0 when critical
    DampingKind kind = DampingKind::critical;
};

[[nodiscard]] inline ScaledBasis scaled_basis(const SpringParams& params, double tau) noexcept
{
    const double half_kd_tau = 0.5 * params.kd * tau;
    const double d = params.discriminant();
    ScaledBasis basis;
    basis.kind = d > 0.0 ? DampingKind::overdamped
                         : (d < 0.0 ? DampingKind::underdamped : DampingKind::critical);

    switch (basis.kind) {
    case DampingKind::overdamped: {
        const double eps = 0.5 * tau * std::sqrt(d);
        const double ep = std::exp(eps - half_kd_tau);  // exponent <= 0 since eps < kd tau/2
        const double em = std::exp(-eps - half_kd_tau);
        basis.ec = 0.5 * (ep + em);
        basis.es = eps == 0.0 ? std::exp(-half_kd_tau)
                              : ep * (-std::expm1(-2.0 * eps)) / (2.0 * eps);
        basis.eh = eps < 1.0 ? std::exp(-half_kd_tau) * h_over(eps)
                             : ((eps - 1.0) * ep + (eps + 1.0) * em) / (2.0 * eps * eps * eps);
        basis.w = d;
        break;
    }
    case DampingKind::underdamped: {
        const double eps = 0.5 * tau * std::sqrt(-d);
        const double decay = std::exp(-half_kd_tau);
        basis.ec = decay * std::cos(eps);
        basis.es = decay * sinc_e(eps);
        basis.eh = decay * h_under(eps);
        basis.w = d;
        break;
    }
    case DampingKind::critical: {
        const double decay = std::exp(-half_kd_tau);
        basis.ec = decay;
        basis.es = decay;
        basis.eh = decay / 3.0;
        basis.w = 0.0;
        break;
    }
    }
    return basis;
}

} // namespace detail

/// Closed-form state at local parameter s in [0,1] of the interval:
///   x(tau) = e^(-kd tau/2) g(tau) + p(tau)
///   v(tau) = e^(-kd tau/2) (g'(tau) - (kd/2) g(tau)) + pdot(tau)
/// with g = g1 C + g2 tau S and g' = g1 (W tau/4) S + g2 C, tau = s dt.
[[nodiscard]] inline ParticleState eval_state(const Gammas& g, const CubicInterval& iv,
                                              const SpringParams& params, double s, double dt) noexcept
{
    const double tau = s * dt;
    const detail::ScaledBasis basis = detail::scaled_basis(params, tau);
    const ParticularValue pv = particular(iv, params, s, dt);

    const Vec3 eg = basis.ec * g.g1 + (tau * basis.es) * g.g2;
    const Vec3 egp = (0.25 * basis.w * tau * basis.es) * g.g1 + basis.ec * g.g2;

    ParticleState out;
    out.x = eg + pv.p;
    out.v = egp - (0.5 * params.kd) * eg + pv.pdot;
    return out;
}

/// Default sequence start: resting on the target with the target's velocity,
/// so the rollout begins with zero transient.
[[nodiscard]] inline ParticleState on_target_state(std::span<const Vec3> positions, double dt)
{
    const CubicInterval iv = build_interval(positions, 0);
    return {eval_target(iv, 0.0), eval_target_velocity(iv, 0.0, dt)};
}

[[nodiscard]] inline ParticleState on_target_state(const SampleTrack& track)
{
    return on_target_state(std::span<const Vec3>(track.positions), track.dt);
}

/// Advances `init` across every interval of the track, writing the state at
/// each sample time t^1..t^N into `out` (out.size() == positions.size()).
/// out[0] is the initial state itself.
inline void step_sequence_into(std::span<const Vec3> positions, double dt, const SpringParams& params,
                               const ParticleState& init, std::span<ParticleState> out)
{
    if (positions.size() < 2)
        throw std::out_of_range("step_sequence: track needs at least two samples");
    ParticleState state = init;
    out[0] = state;
    for (std::size_t n = 0; n + 1 < positions.size(); ++n) {
        const CubicInterval iv = build_interval(positions, n);
        const Gammas g = gammas(state, iv, params, dt);
        state = eval_state(g, iv, params, 1.0, dt);
        out[n + 1] = state;
    }
}

[[nodiscard]] inline std::vector<ParticleState> step_sequence(const SampleTrack& track,
                                                              const SpringParams& params,
                                                              const ParticleState& init)
{
    std::vector<ParticleState> out(track.size());
    step_sequence_into(track.positions, track.dt, params, init, out);
    return out;
}

[[nodiscard]] inline std::vector<ParticleState> step_sequence(const SampleTrack& track,
                                                              const SpringParams& params)
{
    return step_sequence(track, params, on_target_state(track));
}

} // namespace zspring
