#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "zspring/gradient.hpp"
#include "zspring/rng.hpp"
#include "zspring/spring.hpp"
#include "zspring/trajectory.hpp"

namespace zspring {

struct FitBounds {
    double ks_min = 1e-2;
    double ks_max = 1e6;
    double kd_min = 0.0;
    double kd_max = 1e4;
};

struct FitConfig {
    int ga_population = 32;
    int ga_iterations = 5;
    int gd_iterations = 500;
    double gd_step = 0.25;
    bool log_space = true;
    FitBounds bounds;
    double drop_fraction = 0.0;
    double regularization_weight = 0.0;
};

struct FitResult {
    SpringParams params;
    double final_loss = 0.0;
    std::vector<double> per_frame_loss; // squared error per frame, all frames
    DampingRegime regime;
    std::vector<int> dropped_frames; // ascending; empty unless a robust refit ran
    bool converged = false;
};

/// Per-frame inclusion flags; an empty mask means every frame.
using FrameMask = std::vector<char>;

/// Shift for the damping log coordinate log(kd + kappa), keeping kd = 0
/// reachable while the optimization stays in an unconstrained box.
inline constexpr double k_kd_log_shift = 1e-6;

namespace detail {

inline void check_aligned(const SampleTrack& track, const GroundTruthTrack& truth, const FrameMask& mask)
{
    if (truth.size() != track.size())
        throw std::invalid_argument("fitting: track and ground truth have different frame counts");
    if (!mask.empty() && mask.size() != track.size())
        throw std::invalid_argument("fitting: frame mask size does not match frame count");
}

[[nodiscard]] inline double regularizer(const SpringParams& params) { return 1.0 / params.ks; }

} // namespace detail

/// Squared frame errors ||x(t^n) - x_D^n||^2 at the given parameters.
[[nodiscard]] inline std::vector<double> per_frame_losses(const SampleTrack& track,
                                                          const GroundTruthTrack& truth,
                                                          const SpringParams& params)
{
    detail::check_aligned(track, truth, {});
    const std::vector<ParticleState> states = step_sequence(track, params);
    std::vector<double> out(states.size());
    for (std::size_t f = 0; f < states.size(); ++f)
        out[f] = norm_squared(states[f].x - truth.positions[f]);
    return out;
}

/// Sum of masked squared frame errors, plus regularization_weight / ks when
/// a weight is configured. Losses of several sequences simply add.
[[nodiscard]] inline double loss(const SampleTrack& track, const GroundTruthTrack& truth,
                                 const SpringParams& params, const FrameMask& mask = {},
                                 double regularization_weight = 0.0)
{
    detail::check_aligned(track, truth, mask);
    const std::vector<ParticleState> states = step_sequence(track, params);
    double sum = 0.0;
    for (std::size_t f = 0; f < states.size(); ++f) {
        if (!mask.empty() && !mask[f])
            continue;
        sum += norm_squared(states[f].x - truth.positions[f]);
    }
    if (regularization_weight != 0.0)
        sum += regularization_weight * detail::regularizer(params);
    return sum;
}

[[nodiscard]] inline double loss(std::span<const SampleTrack> tracks, std::span<const GroundTruthTrack> truths,
                                 const SpringParams& params, double regularization_weight = 0.0)
{
    if (tracks.size() != truths.size())
        throw std::invalid_argument("fitting: sequence collections have different sizes");
    double sum = 0.0;
    for (std::size_t i = 0; i < tracks.size(); ++i)
        sum += loss(tracks[i], truths[i], params, {}, 0.0);
    if (regularization_weight != 0.0)
        sum += regularization_weight * detail::regularizer(params);
    return sum;
}

struct LossGradient {
    double value = 0.0;
    double dks = 0.0;
    double dkd = 0.0;
};

/// Loss and its analytic parameter gradient from the forward-propagated
/// sensitivities: dL/dk = sum 2 (x - x_D) . dx/dk.
[[nodiscard]] inline LossGradient loss_gradient(const SampleTrack& track, const GroundTruthTrack& truth,
                                                const SpringParams& params, const FrameMask& mask = {},
                                                double regularization_weight = 0.0)
{
    detail::check_aligned(track, truth, mask);
    const PropagatedSequence seq = propagate_sequence(track, params);
    LossGradient out;
    for (std::size_t f = 0; f < seq.states.size(); ++f) {
        if (!mask.empty() && !mask[f])
            continue;
        const Vec3 r = seq.states[f].x - truth.positions[f];
        out.value += norm_squared(r);
        out.dks += 2.0 * dot(r, seq.sensitivities[f].dx_dks);
        out.dkd += 2.0 * dot(r, seq.sensitivities[f].dx_dkd);
    }
    if (regularization_weight != 0.0) {
        out.value += regularization_weight * detail::regularizer(params);
        out.dks += -regularization_weight / (params.ks * params.ks);
    }
    return out;
}

namespace detail {

struct LogBox {
    double uks_lo, uks_hi, ukd_lo, ukd_hi;

    [[nodiscard]] static LogBox from(const FitBounds& b)
    {
        return {std::log(b.ks_min), std::log(b.ks_max), std::log(b.kd_min + k_kd_log_shift),
                std::log(b.kd_max + k_kd_log_shift)};
    }
};

struct LogPoint {
    double uks, ukd;
};

[[nodiscard]] inline LogPoint to_log(const SpringParams& p)
{
    return {std::log(p.ks), std::log(p.kd + k_kd_log_shift)};
}

[[nodiscard]] inline SpringParams from_log(const LogPoint& u)
{
    return {std::exp(u.uks), std::max(0.0, std::exp(u.ukd) - k_kd_log_shift)};
}

[[nodiscard]] inline LogPoint clamp(const LogPoint& u, const LogBox& box)
{
    return {std::clamp(u.uks, box.uks_lo, box.uks_hi), std::clamp(u.ukd, box.ukd_lo, box.ukd_hi)};
}

/// GA core shared by genetic_init and the fit entry points: tournament
/// selection (size 3), per-gene blend crossover, log-normal mutation
/// (sigma 0.5 in log space), elitism.
[[nodiscard]] inline SpringParams ga_minimize(const SampleTrack& track, const GroundTruthTrack& truth,
                                              const FitConfig& cfg, const FrameMask& mask,
                                              std::uint64_t seed, std::span<const SpringParams> seeds)
{
    constexpr int k_tournament = 3;
    constexpr double k_mutation_sigma = 0.5;

    const LogBox box = LogBox::from(cfg.bounds);
    const int pop_size = std::max(1, cfg.ga_population);
    Rng rng(seed);

    const auto evaluate = [&](const LogPoint& u) {
        return loss(track, truth, from_log(u), mask, cfg.regularization_weight);
    };

    std::vector<LogPoint> pop;
    std::vector<double> fitness;
    pop.reserve(pop_size);
    for (const SpringParams& p : seeds) {
        if (static_cast<int>(pop.size()) == pop_size)
            break;
        pop.push_back(clamp(to_log(p), box));
    }
    while (static_cast<int>(pop.size()) < pop_size)
        pop.push_back({uniform(rng, box.uks_lo, box.uks_hi), uniform(rng, box.ukd_lo, box.ukd_hi)});
    fitness.resize(pop_size);
    for (int i = 0; i < pop_size; ++i)
        fitness[i] = evaluate(pop[i]);

    const auto best_index = [&] {
        return static_cast<int>(std::min_element(fitness.begin(), fitness.end()) - fitness.begin());
    };
    const auto tournament = [&] {
        int winner = static_cast<int>(uniform_index(rng, pop_size));
        for (int t = 1; t < k_tournament; ++t) {
            const int c = static_cast<int>(uniform_index(rng, pop_size));
            if (fitness[c] < fitness[winner])
                winner = c;
        }
        return winner;
    };

    for (int gen = 0; gen < cfg.ga_iterations; ++gen) {
        std::vector<LogPoint> next;
        std::vector<double> next_fitness;
        next.reserve(pop_size);
        const int elite = best_index();
        next.push_back(pop[elite]);
        next_fitness.push_back(fitness[elite]);
        while (static_cast<int>(next.size()) < pop_size) {
            const LogPoint& p1 = pop[tournament()];
            const LogPoint& p2 = pop[tournament()];
            const double a1 = uniform01(rng);
            const double a2 = uniform01(rng);
            LogPoint child{a1 * p1.uks + (1.0 - a1) * p2.uks, a2 * p1.ukd + (1.0 - a2) * p2.ukd};
            child.uks += k_mutation_sigma * normal(rng);
            child.ukd += k_mutation_sigma * normal(rng);
            child = clamp(child, box);
            next.push_back(child);
            next_fitness.push_back(evaluate(child));
        }
        pop = std::move(next);
        fitness = std::move(next_fitness);
    }
    return from_log(pop[best_index()]);
}

} // namespace detail

/// A few generations of the genetic algorithm over the full frame set;
/// supplies the gradient-descent initial guess. Extra candidate parameters
/// (e.g. a previous fit) can be injected into the initial population.
[[nodiscard]] inline SpringParams genetic_init(const SampleTrack& track, const GroundTruthTrack& truth,
                                               const FitConfig& cfg, std::uint64_t seed,
                                               std::span<const SpringParams> seeds = {})
{
    detail::check_aligned(track, truth, {});
    return detail::ga_minimize(track, truth, cfg, {}, seed, seeds);
}

namespace detail {

/// GA init followed by gradient descent with backtracking (halve on loss
/// increase, up to 30 halvings; an accepted step doubles the next trial
/// step). Descent is monotone by construction. Converged = relative loss
/// drop over the last 10 iterations fell below 1e-8 before the iteration cap.
[[nodiscard]] inline FitResult fit_particle_masked(const SampleTrack& track, const GroundTruthTrack& truth,
                                                   const FitConfig& cfg, std::uint64_t seed,
                                                   const FrameMask& mask)
{
    check_aligned(track, truth, mask);
    const LogBox box = LogBox::from(cfg.bounds);
    const double w = cfg.regularization_weight;

    SpringParams params = ga_minimize(track, truth, cfg, mask, seed, {});
    LogPoint u = clamp(to_log(params), box);
    params = from_log(u);

    LossGradient lg = loss_gradient(track, truth, params, mask, w);
    std::vector<double> history{lg.value};
    double step = cfg.gd_step;
    bool converged = false;

    for (int it = 0; it < cfg.gd_iterations; ++it) {
        // steepest-descent direction in the active coordinates
        double gu_ks, gu_kd;
        if (cfg.log_space) {
            gu_ks = lg.dks * params.ks;
            gu_kd = lg.dkd * (params.kd + k_kd_log_shift);
        } else {
            gu_ks = lg.dks;
            gu_kd = lg.dkd;
        }

        bool moved = false;
        double trial = step;
        for (int halving = 0; halving <= 30 && !moved; ++halving) {
            SpringParams candidate;
            LogPoint u_try = u;
            if (cfg.log_space) {
                u_try = clamp({u.uks - trial * gu_ks, u.ukd - trial * gu_kd}, box);
                candidate = from_log(u_try);
            } else {
                candidate.ks = std::clamp(params.ks - trial * gu_ks, cfg.bounds.ks_min, cfg.bounds.ks_max);
                candidate.kd = std::clamp(params.kd - trial * gu_kd, cfg.bounds.kd_min, cfg.bounds.kd_max);
                u_try = to_log(candidate);
            }
            const double trial_loss = loss(track, truth, candidate, mask, w);
            if (trial_loss < lg.value) {
                u = u_try;
                params = candidate;
                lg = loss_gradient(track, truth, params, mask, w);
                step = trial * 2.0;
                moved = true;
            } else {
                trial *= 0.5;
            }
        }
        if (!moved) {
            // no descent at line-search resolution: stationary for this method
            converged = true;
            break;
        }
        history.push_back(lg.value);
        const std::size_t n = history.size();
        if (n >= 11) {
            const double before = history[n - 11];
            if (before - lg.value <= 1e-8 * std::max(before, 1e-30)) {
                converged = true;
                break;
            }
        }
    }

    FitResult result;
    result.params = params;
    result.final_loss = lg.value;
    result.per_frame_loss = per_frame_losses(track, truth, params);
    result.regime = classify(params);
    result.converged = converged;
    return result;
}

} // namespace detail

/// Learns (ks, kd) for one particle over all frames.
[[nodiscard]] inline FitResult fit_particle(const SampleTrack& track, const GroundTruthTrack& truth,
                                            const FitConfig& cfg, std::uint64_t seed = 0)
{
    return detail::fit_particle_masked(track, truth, cfg, seed, {});
}

/// Fits on all frames, drops the floor(drop_fraction * N) highest-loss frames
/// of that first fit (ties broken toward the lower frame index), and refits
/// on the retained set. With drop_fraction = 0 this is fit_particle.
[[nodiscard]] inline FitResult robust_refit(const SampleTrack& track, const GroundTruthTrack& truth,
                                            const FitConfig& cfg, std::uint64_t seed = 0)
{
    if (cfg.drop_fraction >= 1.0)
        throw std::invalid_argument("robust_refit: drop_fraction must be below 1");
    FitResult first = detail::fit_particle_masked(track, truth, cfg, seed, {});
    const std::size_t frame_count = track.size();
    const std::size_t drop_count =
        static_cast<std::size_t>(cfg.drop_fraction * static_cast<double>(frame_count));
    if (cfg.drop_fraction <= 0.0 || drop_count == 0)
        return first;

    std::vector<int> order(frame_count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return first.per_frame_loss[a] > first.per_frame_loss[b];
    });
    std::vector<int> dropped(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(drop_count));
    std::sort(dropped.begin(), dropped.end());

    FrameMask mask(frame_count, 1);
    for (const int f : dropped)
        mask[static_cast<std::size_t>(f)] = 0;

    FitResult refit = detail::fit_particle_masked(track, truth, cfg, seed, mask);
    refit.dropped_frames = std::move(dropped);
    return refit;
}

/// Independent per-particle fits over aligned trajectory sets, data-parallel
/// across particles. Every particle draws from an identically seeded stream,
/// so identical inputs produce identical results and the output order never
/// depends on scheduling.
[[nodiscard]] inline std::vector<FitResult> fit_all(const TrajectorySet& targets, const TrajectorySet& truths,
                                                    const FitConfig& cfg, std::uint64_t seed = 0,
                                                    unsigned n_threads = 0)
{
    if (targets.frames != truths.frames || targets.particles != truths.particles || targets.dt != truths.dt)
        throw std::invalid_argument("fit_all: target and truth trajectory sets are misaligned");

    const std::size_t count = targets.particles;
    std::vector<FitResult> results(count);
    if (count == 0)
        return results;

    const auto fit_one = [&](std::size_t p) {
        const SampleTrack track = targets.extract_track(p);
        const GroundTruthTrack truth = truths.extract_truth(p);
        results[p] = robust_refit(track, truth, cfg, seed);
    };

    if (n_threads == 0)
        n_threads = std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(count));

    if (n_threads <= 1) {
        for (std::size_t p = 0; p < count; ++p)
            fit_one(p);
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) {
        workers.emplace_back([&] {
            for (;;) {
                const std::size_t p = next.fetch_add(1);
                if (p >= count || failed.load())
                    return;
                try {
                    fit_one(p);
                } catch (...) {
                    if (!failed.exchange(true))
                        error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& worker : workers)
        worker.join();
    if (error)
        std::rethrow_exception(error);
    return results;
}

} // namespace zspring
