#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trajpred/errors.hpp"
#include "trajpred/kmeans.hpp"
#include "trajpred/trajectory.hpp"

namespace trajpred {

struct DbscanParams {
    double eps = 0.0;  // neighborhood radius, meters
    int min_pts = 1;   // minimum neighborhood size, the point itself included

    void validate() const {
        if (!(eps > 0.0)) {
            throw Error("dbscan: eps must be > 0");
        }
        if (min_pts < 1) {
            throw Error("dbscan: min_pts must be >= 1");
        }
    }
};

enum class PointRole { Core, Edge, Noise };

struct PointLabel {
    PointRole role = PointRole::Noise;
    std::optional<int> cluster_id;  // present iff role != Noise
};

inline Eigen::MatrixX2d points_matrix(const std::vector<TrackPoint>& pts) {
    Eigen::MatrixX2d m(static_cast<Eigen::Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = pts[i].x;
        m(static_cast<Eigen::Index>(i), 1) = pts[i].y;
    }
    return m;
}

/// Classic DBSCAN over 2-D points. Core iff the closed eps-ball holds at
/// least min_pts points (self included). Cluster ids follow the input-order
/// scan over cores; an edge point joins the cluster of the first core within
/// eps, again in input order.
inline std::vector<PointLabel> dbscan(const Eigen::MatrixX2d& points, const DbscanParams& params) {
    params.validate();
    const Eigen::Index n = points.rows();
    const double eps2 = params.eps * params.eps;

    std::vector<std::vector<Eigen::Index>> neighbors(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if ((points.row(i) - points.row(j)).squaredNorm() <= eps2) {
                neighbors[static_cast<std::size_t>(i)].push_back(j);
            }
        }
    }

    std::vector<bool> core(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        core[static_cast<std::size_t>(i)] =
            neighbors[static_cast<std::size_t>(i)].size() >= static_cast<std::size_t>(params.min_pts);
    }

    std::vector<PointLabel> labels(static_cast<std::size_t>(n));
    std::vector<int> cluster_of(static_cast<std::size_t>(n), -1);
    int next_cluster = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!core[static_cast<std::size_t>(i)] || cluster_of[static_cast<std::size_t>(i)] >= 0) {
            continue;
        }
        const int cid = next_cluster++;
        std::deque<Eigen::Index> queue{i};
        cluster_of[static_cast<std::size_t>(i)] = cid;
        while (!queue.empty()) {
            const Eigen::Index p = queue.front();
            queue.pop_front();
            for (Eigen::Index q : neighbors[static_cast<std::size_t>(p)]) {
                if (core[static_cast<std::size_t>(q)] && cluster_of[static_cast<std::size_t>(q)] < 0) {
                    cluster_of[static_cast<std::size_t>(q)] = cid;
                    queue.push_back(q);
                }
            }
        }
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        if (core[static_cast<std::size_t>(i)]) {
            labels[static_cast<std::size_t>(i)] = {PointRole::Core, cluster_of[static_cast<std::size_t>(i)]};
            continue;
        }
        std::optional<int> joined;
        for (Eigen::Index q : neighbors[static_cast<std::size_t>(i)]) {
            if (core[static_cast<std::size_t>(q)]) {
                joined = cluster_of[static_cast<std::size_t>(q)];
                break;  // neighbors are in input order
            }
        }
        labels[static_cast<std::size_t>(i)] =
            joined ? PointLabel{PointRole::Edge, joined} : PointLabel{PointRole::Noise, std::nullopt};
    }
    return labels;
}

/// DBSCAN with a K-Means pre-partition, used when the point count exceeds
/// the partition threshold. Each partition is clustered independently and
/// cluster ids are offset per partition, so labels near partition boundaries
/// may differ from a global run; for well-separated data they coincide.
inline std::vector<PointLabel> dbscan_partitioned(const Eigen::MatrixX2d& points, const DbscanParams& params,
                                                  std::size_t partition_threshold,
                                                  std::uint64_t seed = 0x5eedULL) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (n <= partition_threshold) {
        return dbscan(points, params);
    }
    const int k = static_cast<int>((n + partition_threshold - 1) / partition_threshold);
    const KMeansResult partition = kmeans(points, k, seed);

    std::vector<PointLabel> labels(n);
    int cluster_offset = 0;
    for (int c = 0; c < k; ++c) {
        std::vector<Eigen::Index> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (partition.assignments[i] == c) {
                members.push_back(static_cast<Eigen::Index>(i));
            }
        }
        if (members.empty()) {
            continue;
        }
        Eigen::MatrixX2d sub(static_cast<Eigen::Index>(members.size()), 2);
        for (std::size_t j = 0; j < members.size(); ++j) {
            sub.row(static_cast<Eigen::Index>(j)) = points.row(members[j]);
        }
        const auto sub_labels = dbscan(sub, params);
        int max_id = -1;
        for (std::size_t j = 0; j < members.size(); ++j) {
            PointLabel label = sub_labels[j];
            if (label.cluster_id) {
                max_id = std::max(max_id, *label.cluster_id);
                label.cluster_id = *label.cluster_id + cluster_offset;
            }
            labels[static_cast<std::size_t>(members[j])] = label;
        }
        cluster_offset += max_id + 1;
    }
    return labels;
}

/// Drops points DBSCAN labels as noise, preserving order.
inline Trajectory denoise(const Trajectory& traj, const DbscanParams& params,
                          std::size_t partition_threshold = 50000) {
    const auto labels = dbscan_partitioned(points_matrix(traj.points), params, partition_threshold);
    Trajectory out;
    out.object_id = traj.object_id;
    for (std::size_t i = 0; i < traj.points.size(); ++i) {
        if (labels[i].role != PointRole::Noise) {
            out.points.push_back(traj.points[i]);
        }
    }
    if (out.points.empty()) {
        throw AllPointsNoise("denoise removed every point of trajectory '" + traj.object_id + "'");
    }
    return out;
}

/// Splits a trajectory into maximal runs of consecutive points whose gaps
/// stay within eps; runs shorter than min_pts are discarded.
inline std::vector<TrajectorySegment> segment(const Trajectory& traj, const DbscanParams& params) {
    params.validate();
    if (traj.points.empty()) {
        throw Empty("segment: empty trajectory");
    }
    const double eps2 = params.eps * params.eps;
    std::vector<TrajectorySegment> segments;
    std::size_t run_start = 0;
    const auto flush = [&](std::size_t end) {  // [run_start, end)
        if (end - run_start >= static_cast<std::size_t>(params.min_pts)) {
            TrajectorySegment seg;
            seg.parent_id = traj.object_id;
            seg.index = static_cast<int>(segments.size());
            seg.points.assign(traj.points.begin() + static_cast<std::ptrdiff_t>(run_start),
                              traj.points.begin() + static_cast<std::ptrdiff_t>(end));
            segments.push_back(std::move(seg));
        }
    };
    for (std::size_t i = 1; i < traj.points.size(); ++i) {
        const double dx = traj.points[i].x - traj.points[i - 1].x;
        const double dy = traj.points[i].y - traj.points[i - 1].y;
        if (dx * dx + dy * dy > eps2) {
            flush(i);
            run_start = i;
        }
    }
    flush(traj.points.size());
    if (segments.empty()) {
        throw NoSegments("segment: no run of length >= " + std::to_string(params.min_pts) +
                         " in trajectory '" + traj.object_id + "'");
    }
    return segments;
}

}  // namespace trajpred
