#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "trajpred/errors.hpp"
#include "trajpred/rng.hpp"

namespace trajpred {

struct TrackPoint {
    std::string object_id;
    double timestamp = 0.0;  // seconds
    double x = 0.0;          // meters
    double y = 0.0;          // meters
};

struct Trajectory {
    std::string object_id;
    std::vector<TrackPoint> points;
};

/// Contiguous sub-run of a parent trajectory.
struct TrajectorySegment {
    std::string parent_id;
    int index = 0;
    std::vector<TrackPoint> points;
};

struct GridSpec {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double cell_size = 1.0;  // must be > 0
};

struct GridCell {
    long long col = 0;
    long long row = 0;
    friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct GridSequence {
    std::vector<GridCell> cells;
};

/// Displacement window around an anchor point: history holds the H
/// displacement pairs ending at the anchor, future the F pairs after it.
struct FeatureVector {
    TrackPoint anchor;
    std::vector<double> history;  // 2H entries: dx1,dy1,...
    std::vector<double> future;   // 2F entries
};

inline Trajectory validate_trajectory(std::vector<TrackPoint> raw) {
    if (raw.empty()) {
        throw Empty("trajectory has no points");
    }
    const std::string& id = raw.front().object_id;
    double prev_t = -std::numeric_limits<double>::infinity();
    for (const TrackPoint& p : raw) {
        if (p.object_id != id) {
            throw MixedObjectIds("trajectory mixes object ids '" + id + "' and '" + p.object_id + "'");
        }
        if (!std::isfinite(p.timestamp) || !std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw Error("non-finite field in trajectory '" + id + "'");
        }
        if (!(p.timestamp > prev_t)) {
            throw NonMonotonicTimestamps("timestamps not strictly increasing in trajectory '" + id + "'");
        }
        prev_t = p.timestamp;
    }
    return Trajectory{id, std::move(raw)};
}

inline GridCell grid_cell_of(double x, double y, const GridSpec& grid) {
    return GridCell{
        static_cast<long long>(std::floor((x - grid.origin_x) / grid.cell_size)),
        static_cast<long long>(std::floor((y - grid.origin_y) / grid.cell_size)),
    };
}

/// Maps points to grid cells, collapsing consecutive duplicates.
inline GridSequence to_grid_sequence(const std::vector<TrackPoint>& points, const GridSpec& grid) {
    if (!(grid.cell_size > 0.0)) {
        throw Error("grid cell_size must be > 0");
    }
    GridSequence seq;
    for (const TrackPoint& p : points) {
        GridCell c = grid_cell_of(p.x, p.y, grid);
        if (seq.cells.empty() || !(seq.cells.back() == c)) {
            seq.cells.push_back(c);
        }
    }
    return seq;
}

inline GridSequence to_grid_sequence(const Trajectory& traj, const GridSpec& grid) {
    return to_grid_sequence(traj.points, grid);
}

inline GridSequence to_grid_sequence(const TrajectorySegment& seg, const GridSpec& grid) {
    return to_grid_sequence(seg.points, grid);
}

/// One feature vector per anchor that has H points before and F after it.
/// Yields max(0, len - H - F) vectors.
inline std::vector<FeatureVector> build_feature_vectors(const TrajectorySegment& segment, int H, int F) {
    if (H < 1 || F < 1) {
        throw Error("window sizes H and F must be >= 1");
    }
    const auto& pts = segment.points;
    const auto len = static_cast<long long>(pts.size());
    std::vector<FeatureVector> out;
    if (len - H - F <= 0) {
        return out;
    }
    out.reserve(static_cast<std::size_t>(len - H - F));
    for (long long a = H; a + F < len; ++a) {
        FeatureVector fv;
        fv.anchor = pts[static_cast<std::size_t>(a)];
        fv.history.reserve(2 * static_cast<std::size_t>(H));
        fv.future.reserve(2 * static_cast<std::size_t>(F));
        for (long long j = a - H + 1; j <= a; ++j) {
            fv.history.push_back(pts[j].x - pts[j - 1].x);
            fv.history.push_back(pts[j].y - pts[j - 1].y);
        }
        for (long long j = a + 1; j <= a + F; ++j) {
            fv.future.push_back(pts[j].x - pts[j - 1].x);
            fv.future.push_back(pts[j].y - pts[j - 1].y);
        }
        out.push_back(std::move(fv));
    }
    return out;
}

/// Seeded shuffle split; test side gets round(n * test_fraction) elements.
inline std::pair<std::vector<FeatureVector>, std::vector<FeatureVector>>
split_dataset(const std::vector<FeatureVector>& vectors, double test_fraction, std::uint64_t seed) {
    if (vectors.empty()) {
        throw EmptyInput("split_dataset: no feature vectors");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error("test_fraction must be in (0,1)");
    }
    const std::size_t n = vectors.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.below(i + 1)]);
    }
    auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
    n_test = std::min(n_test, n);
    std::pair<std::vector<FeatureVector>, std::vector<FeatureVector>> result;
    result.first.reserve(n - n_test);
    result.second.reserve(n_test);
    for (std::size_t i = 0; i < n; ++i) {
        (i < n_test ? result.second : result.first).push_back(vectors[order[i]]);
    }
    return result;
}

}  // namespace trajpred
