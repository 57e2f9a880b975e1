#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "zspring/kinematics.hpp"
#include "zspring/vec3.hpp"

namespace zspring {

enum class TrajKind { target, truth, output };

/// frames x particles x 3 positions at uniform sample spacing dt.
/// Stored frame-major: data[f * particles + p].
struct TrajectorySet {
    std::size_t frames = 0;
    std::size_t particles = 0;
    double dt = 1.0;
    TrajKind kind = TrajKind::output;
    std::vector<Vec3> data;

    [[nodiscard]] static TrajectorySet make(std::size_t frames, std::size_t particles, double dt,
                                            TrajKind kind = TrajKind::output)
    {
        TrajectorySet set;
        set.frames = frames;
        set.particles = particles;
        set.dt = dt;
        set.kind = kind;
        set.data.assign(frames * particles, Vec3{});
        return set;
    }

    [[nodiscard]] const Vec3& at(std::size_t frame, std::size_t particle) const
    {
        return data[frame * particles + particle];
    }
    [[nodiscard]] Vec3& at(std::size_t frame, std::size_t particle)
    {
        return data[frame * particles + particle];
    }

    [[nodiscard]] SampleTrack extract_track(std::size_t particle) const
    {
        check_particle(particle);
        SampleTrack track;
        track.dt = dt;
        track.positions.reserve(frames);
        for (std::size_t f = 0; f < frames; ++f)
            track.positions.push_back(at(f, particle));
        return track;
    }

    [[nodiscard]] GroundTruthTrack extract_truth(std::size_t particle) const
    {
        check_particle(particle);
        GroundTruthTrack truth;
        truth.positions.reserve(frames);
        for (std::size_t f = 0; f < frames; ++f)
            truth.positions.push_back(at(f, particle));
        return truth;
    }

private:
    void check_particle(std::size_t particle) const
    {
        if (particle >= particles)
            throw std::out_of_range("TrajectorySet: particle index out of range");
    }
};

} // namespace zspring
