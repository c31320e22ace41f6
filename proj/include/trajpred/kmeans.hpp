#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "trajpred/errors.hpp"
#include "trajpred/rng.hpp"

namespace trajpred {

struct KMeansResult {
    std::vector<int> assignments;  // one index < k per point
    Eigen::MatrixXd centroids;     // k x D
    double sse = 0.0;              // within-cluster sum of squared distances
    std::vector<double> sse_trace; // per Lloyd iteration, non-increasing
};

namespace detail {

inline int nearest_centroid(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, Eigen::Index i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < centroids.rows(); ++k) {
        const double d = (points.row(i) - centroids.row(k)).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(k);
        }
    }
    return best;
}

}  // namespace detail

/// Lloyd iterations from k distinct seeded initial centroids. Empty clusters
/// are repaired by seizing the point currently farthest from its centroid.
inline KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iter = 100) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    if (k < 1 || static_cast<Eigen::Index>(k) > n) {
        throw KTooLarge("kmeans: need 1 <= k <= n, got k=" + std::to_string(k) + " n=" + std::to_string(n));
    }

    // Partial Fisher-Yates for k distinct point indices.
    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        std::swap(order[i], order[i + rng.below(static_cast<std::size_t>(n) - i)]);
    }
    Eigen::MatrixXd centroids(k, d);
    for (int i = 0; i < k; ++i) {
        centroids.row(i) = points.row(static_cast<Eigen::Index>(order[i]));
    }

    KMeansResult result;
    result.assignments.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        result.assignments[static_cast<std::size_t>(i)] = detail::nearest_centroid(points, centroids, i);
    }

    for (int iter = 0; iter < max_iter; ++iter) {
        // Means of current assignment.
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, d);
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int a = result.assignments[static_cast<std::size_t>(i)];
            sums.row(a) += points.row(i);
            ++counts[static_cast<std::size_t>(a)];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
        // Repair empty clusters: seize the point farthest from its centroid.
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] != 0) {
                continue;
            }
            Eigen::Index worst = 0;
            double worst_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int a = result.assignments[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(a)] <= 1) {
                    continue;  // never empty another cluster
                }
                const double dist = (points.row(i) - centroids.row(a)).squaredNorm();
                if (dist > worst_d) {
                    worst_d = dist;
                    worst = i;
                }
            }
            const int old = result.assignments[static_cast<std::size_t>(worst)];
            --counts[static_cast<std::size_t>(old)];
            centroids.row(c) = points.row(worst);
            result.assignments[static_cast<std::size_t>(worst)] = c;
            counts[static_cast<std::size_t>(c)] = 1;
        }

        // Reassign and measure.
        bool changed = false;
        double sse = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const int a = detail::nearest_centroid(points, centroids, i);
            if (a != result.assignments[static_cast<std::size_t>(i)]) {
                changed = true;
                result.assignments[static_cast<std::size_t>(i)] = a;
            }
            sse += (points.row(i) - centroids.row(a)).squaredNorm();
        }
        result.sse_trace.push_back(sse);
        result.sse = sse;
        if (!changed) {
            break;
        }
    }
    result.centroids = std::move(centroids);
    return result;
}

}  // namespace trajpred
