#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "zspring/kinematics.hpp"
#include "zspring/rng.hpp"
#include "zspring/spring.hpp"

namespace zspring {

// Fully implicit first-order integrator of the same spring ODE. It is the
// independent numerical route the closed-form stepper is verified against,
// and doubles as the synthetic ground-truth generator.

/// One backward-Euler step of size h against the end-of-step target:
///   x' = x + h v'
///   v' = v + h (ks (xhat' - x') + kd (vhat' - v'))
/// solved per axis; unconditionally stable for any h > 0.
[[nodiscard]] inline ParticleState be_step(const ParticleState& state, const Vec3& target_pos,
                                           const Vec3& target_vel, const SpringParams& params,
                                           double h) noexcept
{
    const double denom = 1.0 + h * params.kd + h * h * params.ks;
    ParticleState out;
    out.v = (state.v + (h * params.ks) * (target_pos - state.x) + (h * params.kd) * target_vel) / denom;
    out.x = state.x + h * out.v;
    return out;
}

/// Integrates across the track with `substeps` uniform substeps per frame
/// interval, querying the same cubic target construction as the analytic
/// path. Returns states at the sample times (out[0] == init).
[[nodiscard]] inline std::vector<ParticleState> be_simulate(const SampleTrack& track,
                                                            const SpringParams& params,
                                                            const ParticleState& init, int substeps)
{
    if (substeps < 1)
        throw std::invalid_argument("be_simulate: substeps must be >= 1");
    if (track.size() < 2)
        throw std::out_of_range("be_simulate: track needs at least two samples");

    std::vector<ParticleState> out(track.size());
    const double h = track.dt / substeps;
    ParticleState state = init;
    out[0] = state;
    for (std::size_t n = 0; n + 1 < track.size(); ++n) {
        const CubicInterval iv = build_interval(track, n);
        for (int k = 0; k < substeps; ++k) {
            const double s_end = static_cast<double>(k + 1) / substeps;
            state = be_step(state, eval_target(iv, s_end), eval_target_velocity(iv, s_end, track.dt),
                            params, h);
        }
        out[n + 1] = state;
    }
    return out;
}

/// Displaces floor(fraction * N) distinct random frames by a random direction
/// of the given magnitude. Emulates gross per-frame simulation failures.
inline void add_spikes(std::vector<Vec3>& positions, double fraction, double magnitude,
                       std::uint64_t seed)
{
    if (fraction < 0.0 || fraction >= 1.0)
        throw std::invalid_argument("add_spikes: fraction must be in [0, 1)");
    const std::size_t count = static_cast<std::size_t>(fraction * static_cast<double>(positions.size()));
    if (count == 0)
        return;

    detail::Rng rng(seed);
    // partial Fisher-Yates over the frame indices
    std::vector<std::size_t> frames(positions.size());
    for (std::size_t i = 0; i < frames.size(); ++i)
        frames[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + detail::uniform_index(rng, frames.size() - i);
        std::swap(frames[i], frames[j]);
        positions[frames[i]] += magnitude * detail::unit_vector(rng);
    }
}

/// Backward-Euler ground truth with optional spike corruption.
[[nodiscard]] inline GroundTruthTrack synth_truth(const SampleTrack& track, const SpringParams& params,
                                                  const ParticleState& init, int substeps,
                                                  double spike_fraction, double spike_magnitude,
                                                  std::uint64_t seed)
{
    const std::vector<ParticleState> states = be_simulate(track, params, init, substeps);
    GroundTruthTrack truth;
    truth.positions.reserve(states.size());
    for (const ParticleState& st : states)
        truth.positions.push_back(st.x);
    add_spikes(truth.positions, spike_fraction, spike_magnitude, seed);
    return truth;
}

} // namespace zspring
