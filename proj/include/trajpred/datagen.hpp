#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "trajpred/errors.hpp"
#include "trajpred/rng.hpp"
#include "trajpred/trajectory.hpp"

namespace trajpred {

enum class MotionPattern { Straight, LeftTurn, RightTurn, SCurve };
enum class NoiseKind { Gaussian, StudentT, Impulse };

struct ScenarioSpec {
    int n_objects = 1;
    std::vector<MotionPattern> pattern_set{MotionPattern::Straight};
    double step_length = 1.0;      // meters per step
    NoiseKind noise_kind = NoiseKind::Gaussian;
    double noise_scale = 0.0;      // meters
    double impulse_prob = 0.0;     // only used by Impulse noise
    std::uint64_t seed = 0;

    void validate() const {
        if (n_objects < 1) throw Error("scenario: n_objects must be >= 1");
        if (pattern_set.empty()) throw Error("scenario: pattern_set must be non-empty");
        if (!(step_length > 0.0)) throw Error("scenario: step_length must be > 0");
        if (!(noise_scale >= 0.0)) throw Error("scenario: noise_scale must be >= 0");
        if (!(impulse_prob >= 0.0 && impulse_prob <= 1.0)) {
            throw Error("scenario: impulse_prob must be in [0,1]");
        }
    }
};

struct GenStats {
    long long impulse_count = 0;
};

namespace detail {

// Coordinates are snapped to a 2^-20 m grid so that position sums and the
// displacement differences recovered later are exact in double precision.
inline double snap(double v) {
    return std::round(v * 1048576.0) / 1048576.0;
}

constexpr double kTurnRate = 3.0 * M_PI / 180.0;  // per step
constexpr double kSCurveAmplitude = M_PI / 6.0;
constexpr double kSCurvePeriod = 40.0;

}  // namespace detail

/// Seeded synthetic trajectories: one motion pattern per object, unit
/// timestamps, additive per-point noise. Deterministic per (spec, seed).
inline std::vector<Trajectory> generate(const ScenarioSpec& spec, int points_per_traj, GenStats& stats) {
    spec.validate();
    if (points_per_traj < 2) {
        throw Error("generate: points_per_traj must be >= 2");
    }
    stats = GenStats{};
    std::vector<Trajectory> out;
    out.reserve(static_cast<std::size_t>(spec.n_objects));

    for (int obj = 0; obj < spec.n_objects; ++obj) {
        Rng rng(split_seed(spec.seed, static_cast<std::uint64_t>(obj)));
        const MotionPattern pattern = spec.pattern_set[rng.below(spec.pattern_set.size())];
        const double heading0 = rng.uniform(0.0, 2.0 * M_PI);
        double cx = detail::snap(rng.uniform(-100.0, 100.0));
        double cy = detail::snap(rng.uniform(-100.0, 100.0));

        // Precompute the constant step once so noiseless straight runs have
        // bitwise-identical consecutive displacements.
        const double straight_dx = detail::snap(spec.step_length * std::cos(heading0));
        const double straight_dy = detail::snap(spec.step_length * std::sin(heading0));

        Trajectory traj;
        traj.object_id = "obj" + std::to_string(obj);
        traj.points.reserve(static_cast<std::size_t>(points_per_traj));
        for (int i = 0; i < points_per_traj; ++i) {
            double nx = 0.0;
            double ny = 0.0;
            if (spec.noise_scale > 0.0) {
                switch (spec.noise_kind) {
                    case NoiseKind::Gaussian:
                        nx = spec.noise_scale * rng.normal();
                        ny = spec.noise_scale * rng.normal();
                        break;
                    case NoiseKind::StudentT:
                        nx = spec.noise_scale * rng.student_t(3);
                        ny = spec.noise_scale * rng.student_t(3);
                        break;
                    case NoiseKind::Impulse: {
                        nx = spec.noise_scale * rng.normal();
                        ny = spec.noise_scale * rng.normal();
                        if (rng.uniform01() < spec.impulse_prob) {
                            ++stats.impulse_count;
                            const double angle = rng.uniform(0.0, 2.0 * M_PI);
                            const double mag = rng.uniform(0.0, 20.0 * spec.noise_scale);
                            nx += mag * std::cos(angle);
                            ny += mag * std::sin(angle);
                        }
                        break;
                    }
                }
            }
            traj.points.push_back(TrackPoint{traj.object_id, static_cast<double>(i),
                                             cx + detail::snap(nx), cy + detail::snap(ny)});

            double heading = heading0;
            switch (pattern) {
                case MotionPattern::Straight:
                    break;
                case MotionPattern::LeftTurn:
                    heading = heading0 + detail::kTurnRate * i;
                    break;
                case MotionPattern::RightTurn:
                    heading = heading0 - detail::kTurnRate * i;
                    break;
                case MotionPattern::SCurve:
                    heading = heading0 + detail::kSCurveAmplitude
                                             * std::sin(2.0 * M_PI * i / detail::kSCurvePeriod);
                    break;
            }
            if (pattern == MotionPattern::Straight) {
                cx += straight_dx;
                cy += straight_dy;
            } else {
                cx += detail::snap(spec.step_length * std::cos(heading));
                cy += detail::snap(spec.step_length * std::sin(heading));
            }
        }
        out.push_back(validate_trajectory(std::move(traj.points)));
    }
    return out;
}

inline std::vector<Trajectory> generate(const ScenarioSpec& spec, int points_per_traj) {
    GenStats stats;
    return generate(spec, points_per_traj, stats);
}

}  // namespace trajpred
