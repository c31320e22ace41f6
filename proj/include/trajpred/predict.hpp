#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "trajpred/errors.hpp"
#include "trajpred/math.hpp"
#include "trajpred/student_t.hpp"
#include "trajpred/trajectory.hpp"
#include "trajpred/vbgmm.hpp"

namespace trajpred {

struct StudentTComponent {
    double weight = 0.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd precision;
    double dof = 0.0;
};

struct PredictiveMixture {
    std::vector<StudentTComponent> components;
    int D = 0;
    int h_dim = 0;
    int f_dim = 0;
};

/// A fitted model plus the windowing metadata it was trained with.
struct TrainedModel {
    VbGmmModel model;
    int H = 0;
    int F = 0;
    bool eta_paper_exact = false;
    double score = 0.0;  // validation mean conditional log-density
};

struct ConditionalPrediction {
    Eigen::VectorXd gating;                  // sums to 1
    std::vector<Eigen::VectorXd> cond_means;
    std::vector<double> cond_dofs;
    std::vector<Eigen::MatrixXd> cond_scales;  // scale matrices for density evaluation
    Eigen::VectorXd point;                   // gating-weighted mean
};

struct CandidateGrid {
    std::vector<int> K_values;
    std::vector<int> H_values;
    int F = 1;
    std::optional<Hyperparameters> hyper;  // defaults derived from data when absent
    // scalar overrides applied on top of the base hyperparameters
    std::optional<double> alpha0_override;
    std::optional<double> beta0_override;
    std::optional<double> v0_override;

    void validate() const {
        if (K_values.empty() || H_values.empty()) {
            throw Error("candidate grid must be non-empty");
        }
        for (int k : K_values) {
            if (k < 1) throw Error("candidate grid: K values must be >= 1");
        }
        for (int h : H_values) {
            if (h < 1) throw Error("candidate grid: H values must be >= 1");
        }
        if (F < 1) {
            throw Error("candidate grid: F must be >= 1");
        }
    }
};

inline Eigen::VectorXd to_feature(const FeatureVector& fv) {
    Eigen::VectorXd x(fv.history.size() + fv.future.size());
    for (std::size_t i = 0; i < fv.history.size(); ++i) {
        x[static_cast<Eigen::Index>(i)] = fv.history[i];
    }
    for (std::size_t i = 0; i < fv.future.size(); ++i) {
        x[static_cast<Eigen::Index>(fv.history.size() + i)] = fv.future[i];
    }
    return x;
}

inline Eigen::MatrixXd feature_matrix(const std::vector<FeatureVector>& vectors) {
    if (vectors.empty()) {
        throw EmptyInput("feature_matrix: no vectors");
    }
    const auto d = static_cast<Eigen::Index>(vectors.front().history.size() + vectors.front().future.size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(vectors.size()), d);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        m.row(static_cast<Eigen::Index>(i)) = to_feature(vectors[i]).transpose();
    }
    return m;
}

/// Posterior-predictive Student-t mixture of a fitted model. The default
/// component precision carries the beta_k/(1+beta_k) shrinkage; the
/// paper-exact variant drops the beta_k factor from the numerator.
inline PredictiveMixture to_predictive_mixture(const VbGmmModel& model, int h_dim, int f_dim,
                                               bool eta_paper_exact = false) {
    if (h_dim + f_dim != model.D) {
        throw Error("to_predictive_mixture: h_dim + f_dim must equal D");
    }
    PredictiveMixture mix;
    mix.D = model.D;
    mix.h_dim = h_dim;
    mix.f_dim = f_dim;
    double alpha_sum = 0.0;
    for (const auto& c : model.components) {
        alpha_sum += c.alpha;
    }
    for (const auto& c : model.components) {
        const double dof = c.v + 1.0 - model.D;
        if (!(dof > 0.0)) {
            throw DofNotPositive("to_predictive_mixture: v_k + 1 - D <= 0");
        }
        const double scale = eta_paper_exact ? dof / (1.0 + c.beta)
                                             : dof * c.beta / (1.0 + c.beta);
        mix.components.push_back({c.alpha / alpha_sum, c.m, symmetrize(scale * c.w), dof});
    }
    return mix;
}

/// Conditions the mixture on an observed history block: per component the
/// scale matrix is split into blocks, the gate is the history-marginal
/// Student-t density, and the conditional mean/scale follow the standard
/// Schur-complement formulas with dof raised by h_dim.
inline ConditionalPrediction condition(const PredictiveMixture& mix, const Eigen::VectorXd& x_h) {
    const int h = mix.h_dim;
    const int f = mix.f_dim;
    if (x_h.size() != h) {
        throw Error("condition: history dimension mismatch");
    }
    if (!x_h.allFinite()) {
        throw Error("condition: non-finite history");
    }
    const auto K = static_cast<Eigen::Index>(mix.components.size());

    ConditionalPrediction out;
    Eigen::VectorXd log_gate(K);
    out.cond_means.reserve(static_cast<std::size_t>(K));
    out.cond_dofs.reserve(static_cast<std::size_t>(K));
    out.cond_scales.reserve(static_cast<std::size_t>(K));

    for (Eigen::Index k = 0; k < K; ++k) {
        const StudentTComponent& c = mix.components[static_cast<std::size_t>(k)];
        const Eigen::MatrixXd sigma = spd_inverse(c.precision, "condition: component scale");
        const Eigen::MatrixXd sigma_hh = sigma.topLeftCorner(h, h);
        const Eigen::MatrixXd sigma_fh = sigma.bottomLeftCorner(f, h);
        const Eigen::MatrixXd sigma_ff = sigma.bottomRightCorner(f, f);
        const Eigen::VectorXd m_h = c.mean.head(h);
        const Eigen::VectorXd m_f = c.mean.tail(f);

        const auto llt_hh = safe_llt(sigma_hh, "condition: history block");
        const Eigen::VectorXd diff_h = x_h - m_h;
        const Eigen::VectorXd solved = llt_hh.solve(diff_h);
        const double delta_h = diff_h.dot(solved);

        log_gate[k] = std::log(c.weight)
                      + student_t_logpdf(x_h, m_h, spd_inverse(sigma_hh, "condition: history precision"), c.dof);

        out.cond_means.push_back(m_f + sigma_fh * solved);
        out.cond_dofs.push_back(c.dof + h);
        const Eigen::MatrixXd schur = sigma_ff - sigma_fh * llt_hh.solve(sigma_fh.transpose());
        out.cond_scales.push_back(symmetrize(((c.dof + delta_h) / (c.dof + h)) * schur));
    }

    const double lse = log_sum_exp(log_gate);
    if (!std::isfinite(lse)) {
        throw NumericalFailure("condition: gating underflow");
    }
    out.gating = (log_gate.array() - lse).exp().matrix();
    out.point = Eigen::VectorXd::Zero(f);
    for (Eigen::Index k = 0; k < K; ++k) {
        out.point += out.gating[k] * out.cond_means[static_cast<std::size_t>(k)];
    }
    return out;
}

/// log p(x_f | x_h) of the conditioned mixture.
inline double conditional_log_density(const ConditionalPrediction& cond, const Eigen::VectorXd& x_f) {
    const auto K = cond.gating.size();
    Eigen::VectorXd terms(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        if (cond.gating[k] <= 0.0) {
            terms[k] = -std::numeric_limits<double>::infinity();
            continue;
        }
        const Eigen::MatrixXd prec = spd_inverse(cond.cond_scales[static_cast<std::size_t>(k)],
                                                 "conditional density scale");
        terms[k] = std::log(cond.gating[k])
                   + student_t_logpdf(x_f, cond.cond_means[static_cast<std::size_t>(k)], prec,
                                      cond.cond_dofs[static_cast<std::size_t>(k)]);
    }
    return log_sum_exp(terms);
}

namespace detail {

inline Eigen::VectorXd history_vector(const std::vector<TrackPoint>& pts, int H) {
    Eigen::VectorXd x(2 * H);
    const std::size_t n = pts.size();
    for (int j = 0; j < H; ++j) {
        const std::size_t i = n - static_cast<std::size_t>(H - j);
        x[2 * j] = pts[i].x - pts[i - 1].x;
        x[2 * j + 1] = pts[i].y - pts[i - 1].y;
    }
    return x;
}

}  // namespace detail

/// Rolls the conditional regression forward: each pass conditions on the
/// last H displacements and emits F displacement pairs, re-fed
/// autoregressively until `steps` absolute points exist.
inline std::vector<TrackPoint> predict_future(const TrainedModel& tm, const std::vector<TrackPoint>& recent,
                                              int steps) {
    const int H = tm.H;
    const int F = tm.F;
    if (steps < 1) {
        throw Error("predict_future: steps must be >= 1");
    }
    if (recent.size() < static_cast<std::size_t>(H) + 1) {
        throw InsufficientHistory("predict_future: need at least H+1 = " + std::to_string(H + 1) +
                                  " recent points, got " + std::to_string(recent.size()));
    }
    const PredictiveMixture mix = to_predictive_mixture(tm.model, 2 * H, 2 * F, tm.eta_paper_exact);

    std::vector<TrackPoint> window(recent);
    const double dt = window.back().timestamp - window[window.size() - 2].timestamp;
    std::vector<TrackPoint> out;
    out.reserve(static_cast<std::size_t>(steps));
    while (out.size() < static_cast<std::size_t>(steps)) {
        const ConditionalPrediction cond = condition(mix, detail::history_vector(window, H));
        for (int j = 0; j < F && out.size() < static_cast<std::size_t>(steps); ++j) {
            TrackPoint next = window.back();
            next.timestamp += dt;
            next.x += cond.point[2 * j];
            next.y += cond.point[2 * j + 1];
            window.push_back(next);
            out.push_back(next);
        }
    }
    return out;
}

struct SelectionResult {
    TrainedModel model;
    int K = 0;
    int H = 0;
    double score = 0.0;
};

/// Fits one model per (K,H) cell of the grid (windowing the segments per H)
/// and keeps the one with the highest mean conditional log-density of the
/// validation futures given their histories. Ties within 1e-15 go to the
/// smaller K, then the smaller H. Per-cell seeds are seed + cell index.
inline SelectionResult select_model(const std::vector<TrajectorySegment>& train,
                                    const std::vector<TrajectorySegment>& validation,
                                    const CandidateGrid& grid, double tol, int max_iter,
                                    std::uint64_t seed, bool eta_paper_exact = false) {
    grid.validate();
    constexpr double kTieTol = 1e-15;

    std::optional<SelectionResult> best;
    std::uint64_t cell = 0;
    std::string last_failure = "no feasible grid cell";
    for (int K : grid.K_values) {
        for (int H : grid.H_values) {
            const std::uint64_t cell_seed = seed + cell;
            ++cell;

            std::vector<FeatureVector> train_vecs;
            std::vector<FeatureVector> val_vecs;
            for (const auto& seg : train) {
                auto v = build_feature_vectors(seg, H, grid.F);
                train_vecs.insert(train_vecs.end(), v.begin(), v.end());
            }
            for (const auto& seg : validation) {
                auto v = build_feature_vectors(seg, H, grid.F);
                val_vecs.insert(val_vecs.end(), v.begin(), v.end());
            }
            if (val_vecs.empty()) {
                throw EmptyInput("select_model: validation windows empty for H=" + std::to_string(H));
            }
            if (train_vecs.size() < static_cast<std::size_t>(K)) {
                last_failure = "fewer training windows than K";
                continue;
            }

            try {
                const Eigen::MatrixXd data = feature_matrix(train_vecs);
                Hyperparameters hyper = grid.hyper ? *grid.hyper : Hyperparameters::defaults(data, K);
                if (grid.alpha0_override) hyper.alpha0 = *grid.alpha0_override;
                if (grid.beta0_override) hyper.beta0 = *grid.beta0_override;
                if (grid.v0_override) hyper.v0 = *grid.v0_override;
                VbGmmModel model = fit(data, K, hyper, tol, max_iter, cell_seed);
                const PredictiveMixture mix = to_predictive_mixture(model, 2 * H, 2 * grid.F, eta_paper_exact);

                double score = 0.0;
                for (const auto& fv : val_vecs) {
                    Eigen::VectorXd x_h(2 * H);
                    Eigen::VectorXd x_f(2 * grid.F);
                    for (std::size_t i = 0; i < fv.history.size(); ++i) {
                        x_h[static_cast<Eigen::Index>(i)] = fv.history[i];
                    }
                    for (std::size_t i = 0; i < fv.future.size(); ++i) {
                        x_f[static_cast<Eigen::Index>(i)] = fv.future[i];
                    }
                    score += conditional_log_density(condition(mix, x_h), x_f);
                }
                score /= static_cast<double>(val_vecs.size());

                const bool better =
                    !best || score > best->score + kTieTol ||
                    (std::abs(score - best->score) <= kTieTol &&
                     (K < best->K || (K == best->K && H < best->H)));
                if (better) {
                    best = SelectionResult{TrainedModel{std::move(model), H, grid.F, eta_paper_exact, score},
                                           K, H, score};
                }
            } catch (const NumericalFailure& e) {
                last_failure = e.what();
            } catch (const DofNotPositive& e) {
                last_failure = e.what();
            }
        }
    }
    if (!best) {
        throw AllFitsFailed("select_model: every grid cell failed (" + last_failure + ")");
    }
    return *best;
}

}  // namespace trajpred
