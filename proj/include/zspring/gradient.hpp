#pragma once

#include <stdexcept>
#include <vector>

#include "zspring/spring.hpp"

namespace zspring {

/// Parameter partials of one particle's state, carried across intervals.
/// Zero at sequence start: the initial conditions do not depend on ks/kd.
struct SensitivityState {
    Vec3 dx_dks, dv_dks;
    Vec3 dx_dkd, dv_dkd;
};

struct ParticularSensitivity {
    Vec3 dp_dks, dp_dkd;
    Vec3 dpdot_dks, dpdot_dkd;
};

/// Parameter partials of the particular solution:
///   dp/dks    = (6 q s + 2 a)/(ks^2 dt^2) - 12 kd q/(ks^3 dt^3)
///   dp/dkd    = 6 q/(ks^2 dt^3)
///   dpdot/dks = 6 q/(ks^2 dt^3)
///   dpdot/dkd = 0
[[nodiscard]] inline ParticularSensitivity dparticular(const CubicInterval& iv, const SpringParams& params,
                                                       double s, double dt) noexcept
{
    const double ks = params.ks;
    const double dt2 = dt * dt;
    const double dt3 = dt2 * dt;
    ParticularSensitivity out;
    out.dp_dks = (6.0 * iv.q * s + 2.0 * iv.a) / (ks * ks * dt2)
                 - (12.0 * params.kd / (ks * ks * ks * dt3)) * iv.q;
    out.dp_dkd = (6.0 / (ks * ks * dt3)) * iv.q;
    out.dpdot_dks = (6.0 / (ks * ks * dt3)) * iv.q;
    out.dpdot_dkd = Vec3{};
    return out;
}

struct EpsilonProducts {
    double dks = 0.0; // eps * d(eps)/d(ks)
    double dkd = 0.0; // eps * d(eps)/d(kd)
};

/// The products eps*deps/dks = -+ dt^2 s^2 / 2 and eps*deps/dkd =
/// +- dt^2 s^2 kd / 4 (upper signs overdamped, lower underdamped), which stay
/// finite where eps itself has a square-root singularity in the parameters.
/// On the critical manifold the products are not defined; callers take the
/// shared limit path instead (see grad_eval).
[[nodiscard]] inline EpsilonProducts epsilon_products(const SpringParams& params, DampingKind kind,
                                                      double s, double dt)
{
    if (kind == DampingKind::critical)
        throw std::domain_error("epsilon_products: undefined on the critical manifold; use the limit path");
    const double tau2 = dt * dt * s * s;
    const double sign = kind == DampingKind::overdamped ? 1.0 : -1.0;
    return {-sign * 0.5 * tau2, sign * 0.25 * tau2 * params.kd};
}

/// Parameter partials of the gamma coefficients for one interval, assembled
/// from the incoming state sensitivity and dparticular at s = 0.
struct GammaSensitivity {
    Vec3 dg1_dks, dg1_dkd;
    Vec3 dg2_dks, dg2_dkd;
};

[[nodiscard]] inline GammaSensitivity gamma_sensitivity(const SensitivityState& incoming, const Gammas& g,
                                                        const ParticularSensitivity& dp0,
                                                        const SpringParams& params) noexcept
{
    const double half_kd = 0.5 * params.kd;
    GammaSensitivity dg;
    dg.dg1_dks = incoming.dx_dks - dp0.dp_dks;
    dg.dg1_dkd = incoming.dx_dkd - dp0.dp_dkd;
    dg.dg2_dks = incoming.dv_dks + half_kd * dg.dg1_dks - dp0.dpdot_dks;
    // differentiating (kd/2) g1 with respect to kd contributes g1/2
    dg.dg2_dkd = incoming.dv_dkd + half_kd * dg.dg1_dkd + 0.5 * g.g1 - dp0.dpdot_dkd;
    return dg;
}

/// Chain-rule partials of position and velocity at local parameter s:
///   dx/dks = E dg/dks + dp/dks
///   dx/dkd = E dg/dkd - (tau/2) E g + dp/dkd
/// with dg/dk = C dg1/dk + tau S dg2/dk + (1/eps dg/deps)(eps deps/dk), the
/// last product evaluated through the guarded sinhc/sinc and h_over/h_under
/// kernels so it is continuous through the critical manifold, where it takes
/// its eps -> 0 limit. Velocity partials differentiate the explicit
/// g' = g1 (W tau/4) S + g2 C form the same way; they are what the next
/// interval's gamma sensitivities recurse on.
[[nodiscard]] inline SensitivityState grad_eval(const Gammas& g, const GammaSensitivity& dg,
                                                const CubicInterval& iv, const SpringParams& params,
                                                double s, double dt)
{
    const double tau = s * dt;
    const double kd = params.kd;
    const detail::ScaledBasis basis = detail::scaled_basis(params, tau);
    const ParticularSensitivity dp = dparticular(iv, params, s, dt);

    const double ec = basis.ec;
    const double es = basis.es;
    const double tau_es = tau * es;

    // E-scaled (1/eps)(dg/deps) carries a regime sign; the eps*deps/dk
    // products carry the opposite one, so the combined terms are sign-free:
    //   d/dks term = -(tau^2/2)   (g1 S + g2 tau H) * E
    //   d/dkd term = +(tau^2 kd/4)(g1 S + g2 tau H) * E
    const Vec3 kernel = es * g.g1 + (tau * basis.eh) * g.g2;
    Vec3 term_ks, term_kd;
    if (basis.kind == DampingKind::critical) {
        const double tau2 = tau * tau;
        term_ks = -0.5 * tau2 * kernel;
        term_kd = 0.25 * tau2 * kd * kernel;
    } else {
        const EpsilonProducts prod = epsilon_products(params, basis.kind, s, dt);
        const double sign = basis.kind == DampingKind::overdamped ? 1.0 : -1.0;
        term_ks = (sign * prod.dks) * kernel;
        term_kd = (sign * prod.dkd) * kernel;
    }

    const Vec3 edg_dks = ec * dg.dg1_dks + tau_es * dg.dg2_dks + term_ks;
    const Vec3 edg_dkd = ec * dg.dg1_dkd + tau_es * dg.dg2_dkd + term_kd;

    // dg'/dk from g' = g1 (W tau/4) S + g2 C, with dW/dks = -4, dW/dkd = 2 kd
    // and dS/deps = eps H, dC/deps = eps S folded through the products above;
    // the g1 terms of both partials share the factor g1 (S + W tau^2 H / 8)
    const double w_tau_es = 0.25 * basis.w * tau * es;
    const Vec3 g1_bracket = es * g.g1 + (0.125 * basis.w * tau * tau) * (basis.eh * g.g1);
    const Vec3 edgp_dks = w_tau_es * dg.dg1_dks + ec * dg.dg2_dks - tau * g1_bracket
                          - (0.5 * tau * tau) * (es * g.g2);
    const Vec3 edgp_dkd = w_tau_es * dg.dg1_dkd + ec * dg.dg2_dkd + (0.5 * tau * kd) * g1_bracket
                          + (0.25 * tau * tau * kd) * (es * g.g2);

    const Vec3 eg = ec * g.g1 + tau_es * g.g2;
    const Vec3 egp = w_tau_es * g.g1 + ec * g.g2;

    SensitivityState out;
    out.dx_dks = edg_dks + dp.dp_dks;
    out.dx_dkd = edg_dkd - (0.5 * tau) * eg + dp.dp_dkd;
    out.dv_dks = edgp_dks - (0.5 * kd) * edg_dks + dp.dpdot_dks;
    out.dv_dkd = edgp_dkd - 0.5 * eg - (0.5 * kd) * edg_dkd - (0.5 * tau) * (egp - (0.5 * kd) * eg);
    return out;
}

struct PropagatedSequence {
    std::vector<ParticleState> states;
    std::vector<SensitivityState> sensitivities;
};

/// step_sequence with the four parameter partials co-propagated forward.
/// states matches step_sequence bit for bit; sensitivities[0] is zero.
[[nodiscard]] inline PropagatedSequence propagate_sequence(std::span<const Vec3> positions, double dt,
                                                           const SpringParams& params,
                                                           const ParticleState& init)
{
    if (positions.size() < 2)
        throw std::out_of_range("propagate_sequence: track needs at least two samples");
    PropagatedSequence out;
    out.states.resize(positions.size());
    out.sensitivities.resize(positions.size());

    ParticleState state = init;
    SensitivityState sens{};
    out.states[0] = state;
    out.sensitivities[0] = sens;
    for (std::size_t n = 0; n + 1 < positions.size(); ++n) {
        const CubicInterval iv = build_interval(positions, n);
        const Gammas g = gammas(state, iv, params, dt);
        const ParticularSensitivity dp0 = dparticular(iv, params, 0.0, dt);
        const GammaSensitivity dg = gamma_sensitivity(sens, g, dp0, params);
        state = eval_state(g, iv, params, 1.0, dt);
        sens = grad_eval(g, dg, iv, params, 1.0, dt);
        out.states[n + 1] = state;
        out.sensitivities[n + 1] = sens;
    }
    return out;
}

[[nodiscard]] inline PropagatedSequence propagate_sequence(const SampleTrack& track, const SpringParams& params,
                                                           const ParticleState& init)
{
    return propagate_sequence(std::span<const Vec3>(track.positions), track.dt, params, init);
}

[[nodiscard]] inline PropagatedSequence propagate_sequence(const SampleTrack& track, const SpringParams& params)
{
    return propagate_sequence(track, params, on_target_state(track));
}

} // namespace zspring
