#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "trajpred/errors.hpp"
#include "trajpred/predict.hpp"
#include "trajpred/rng.hpp"
#include "trajpred/trajectory.hpp"

namespace trajpred {

/// Mean per-step Euclidean error. The conventional RMSE name is kept even
/// though the formula is the plain average of per-step distances.
inline double rmse(const std::vector<Eigen::Vector2d>& predicted, const std::vector<Eigen::Vector2d>& actual) {
    if (predicted.size() != actual.size()) {
        throw LengthMismatch("rmse: length mismatch");
    }
    if (predicted.empty()) {
        throw EmptyInput("rmse: empty input");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        sum += (predicted[i] - actual[i]).norm();
    }
    return sum / static_cast<double>(predicted.size());
}

/// Fraction of steps whose predicted point lands in the same grid cell as
/// the actual point.
inline double accuracy(const std::vector<Eigen::Vector2d>& predicted, const std::vector<Eigen::Vector2d>& actual,
                       const GridSpec& grid) {
    if (predicted.size() != actual.size()) {
        throw LengthMismatch("accuracy: length mismatch");
    }
    if (predicted.empty()) {
        throw EmptyInput("accuracy: empty input");
    }
    if (!(grid.cell_size > 0.0)) {
        throw Error("accuracy: grid cell_size must be > 0");
    }
    int hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (grid_cell_of(predicted[i].x(), predicted[i].y(), grid) ==
            grid_cell_of(actual[i].x(), actual[i].y(), grid)) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

inline std::vector<Eigen::Vector2d> positions_of(const std::vector<TrackPoint>& pts) {
    std::vector<Eigen::Vector2d> out;
    out.reserve(pts.size());
    for (const auto& p : pts) {
        out.emplace_back(p.x, p.y);
    }
    return out;
}

inline double rmse(const std::vector<TrackPoint>& predicted, const std::vector<TrackPoint>& actual) {
    return rmse(positions_of(predicted), positions_of(actual));
}

inline double accuracy(const std::vector<TrackPoint>& predicted, const std::vector<TrackPoint>& actual,
                       const GridSpec& grid) {
    return accuracy(positions_of(predicted), positions_of(actual), grid);
}

/// Extrapolates the last observed displacement linearly.
inline std::vector<TrackPoint> constant_velocity_baseline(const std::vector<TrackPoint>& recent, int steps) {
    if (recent.size() < 2) {
        throw InsufficientHistory("constant_velocity_baseline: need >= 2 recent points");
    }
    if (steps < 1) {
        throw Error("constant_velocity_baseline: steps must be >= 1");
    }
    const TrackPoint& last = recent.back();
    const TrackPoint& prev = recent[recent.size() - 2];
    const double dx = last.x - prev.x;
    const double dy = last.y - prev.y;
    const double dt = last.timestamp - prev.timestamp;
    std::vector<TrackPoint> out;
    out.reserve(static_cast<std::size_t>(steps));
    TrackPoint p = last;
    for (int i = 0; i < steps; ++i) {
        p.x += dx;
        p.y += dy;
        p.timestamp += dt;
        out.push_back(p);
    }
    return out;
}

struct EvalRow {
    int observable_length = 0;
    double rmse = 0.0;
    double accuracy = 0.0;
    int n_cases = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
};

/// Maps an H+1-point history window to F predicted points.
using WindowPredictor = std::function<std::vector<TrackPoint>(const std::vector<TrackPoint>&)>;
/// Builds the predictor used for a given observable length.
using PredictorFactory = std::function<WindowPredictor(int)>;

/// Scores one predictor over every (H+1 history, F future) window of the
/// test segments.
inline EvalRow evaluate_windows(const WindowPredictor& predict, const std::vector<TrajectorySegment>& test_segments,
                                int H, int F, const GridSpec& cell_grid) {
    EvalRow row;
    row.observable_length = H;
    double rmse_sum = 0.0;
    double acc_sum = 0.0;
    for (const auto& seg : test_segments) {
        const auto len = static_cast<long long>(seg.points.size());
        for (long long a = H; a + F < len; ++a) {
            const std::vector<TrackPoint> history(seg.points.begin() + (a - H), seg.points.begin() + (a + 1));
            const std::vector<TrackPoint> actual(seg.points.begin() + (a + 1), seg.points.begin() + (a + 1 + F));
            const std::vector<TrackPoint> predicted = predict(history);
            rmse_sum += rmse(predicted, actual);
            acc_sum += accuracy(predicted, actual, cell_grid);
            ++row.n_cases;
        }
    }
    if (row.n_cases == 0) {
        throw NoTestCases("no test cases for H=" + std::to_string(H));
    }
    row.rmse = rmse_sum / row.n_cases;
    row.accuracy = acc_sum / row.n_cases;
    return row;
}

/// One report row per observable length, ascending H order in h_range.
inline EvalReport sweep_observable_length(const PredictorFactory& factory,
                                          const std::vector<TrajectorySegment>& test_segments,
                                          const std::vector<int>& h_range, int F, const GridSpec& cell_grid) {
    if (h_range.empty()) {
        throw NoTestCases("sweep: empty H range");
    }
    EvalReport report;
    for (int H : h_range) {
        report.rows.push_back(evaluate_windows(factory(H), test_segments, H, F, cell_grid));
    }
    return report;
}

/// Full sweep: per observable length, selects a model on the training
/// segments (grid restricted to that H) and evaluates it on the test
/// segments. Sub-seeds are derived per H row.
inline EvalReport sweep_observable_length(const std::vector<TrajectorySegment>& train_segments,
                                          const std::vector<TrajectorySegment>& validation_segments,
                                          const std::vector<TrajectorySegment>& test_segments,
                                          const CandidateGrid& grid, std::vector<int> h_range,
                                          const GridSpec& cell_grid, double tol, int max_iter,
                                          std::uint64_t seed, bool eta_paper_exact = false) {
    std::sort(h_range.begin(), h_range.end());
    h_range.erase(std::unique(h_range.begin(), h_range.end()), h_range.end());
    const PredictorFactory factory = [&, seed](int H) -> WindowPredictor {
        CandidateGrid cell = grid;
        cell.H_values = {H};
        const std::uint64_t row_seed = split_seed(seed, static_cast<std::uint64_t>(H));
        SelectionResult sel = select_model(train_segments, validation_segments, cell, tol, max_iter,
                                           row_seed, eta_paper_exact);
        return [tm = std::move(sel.model), F = grid.F](const std::vector<TrackPoint>& history) {
            return predict_future(tm, history, F);
        };
    };
    return sweep_observable_length(factory, test_segments, h_range, grid.F, cell_grid);
}

}  // namespace trajpred
