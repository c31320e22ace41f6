#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "trajpred/errors.hpp"
#include "trajpred/kmeans.hpp"
#include "trajpred/math.hpp"

namespace trajpred {

/// Dirichlet-Normal-Wishart prior: weights ~ Dir(alpha0), mean_k | Lambda_k ~
/// N(m0, (beta0 Lambda_k)^-1), Lambda_k ~ Wishart(w0, v0).
struct Hyperparameters {
    double alpha0 = 1.0;
    double beta0 = 1.0;
    Eigen::VectorXd m0;
    Eigen::MatrixXd w0;
    double v0 = 0.0;

    void validate(Eigen::Index d) const {
        if (!(alpha0 > 0.0) || !(beta0 > 0.0)) {
            throw Error("hyperparameters: alpha0 and beta0 must be > 0");
        }
        if (m0.size() != d || w0.rows() != d || w0.cols() != d) {
            throw Error("hyperparameters: dimension mismatch");
        }
        if (!(v0 > static_cast<double>(d) - 1.0)) {
            throw Error("hyperparameters: v0 must exceed D-1");
        }
        safe_llt(w0, "hyperparameters w0");
    }

    /// Weakly informative, scale-aware defaults: alpha0 = 1/K, beta0 = 1,
    /// m0 = data mean, v0 = D+2, w0 = (regularized data covariance)^-1 / v0.
    static Hyperparameters defaults(const Eigen::MatrixXd& data, int K) {
        const Eigen::Index n = data.rows();
        const Eigen::Index d = data.cols();
        Hyperparameters h;
        h.alpha0 = 1.0 / static_cast<double>(K);
        h.beta0 = 1.0;
        h.v0 = static_cast<double>(d) + 2.0;
        h.m0 = data.colwise().mean();
        Eigen::MatrixXd centered = data.rowwise() - h.m0.transpose();
        Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
        const double ridge = std::max(1e-10, 1e-8 * cov.trace() / static_cast<double>(d));
        cov += ridge * Eigen::MatrixXd::Identity(d, d);
        h.w0 = spd_inverse(symmetrize(cov), "default w0") / h.v0;
        return h;
    }
};

struct Responsibilities {
    Eigen::MatrixXd r;  // N x K, rows sum to 1
};

struct SufficientStats {
    Eigen::VectorXd Nk;             // K
    Eigen::MatrixXd xbar;           // K x D
    std::vector<Eigen::MatrixXd> Sk;  // K of D x D, PSD
};

struct ComponentPosterior {
    double alpha = 0.0;
    double beta = 0.0;
    Eigen::VectorXd m;
    Eigen::MatrixXd w;
    double v = 0.0;
};

struct VbGmmModel {
    int K = 0;
    int D = 0;
    Hyperparameters hyper;
    std::vector<ComponentPosterior> components;
    std::vector<double> elbo_trace;
    bool converged = false;
    std::uint64_t seed = 0;
};

namespace detail {

inline double expected_log_det_lambda(const ComponentPosterior& c) {
    const auto d = static_cast<int>(c.m.size());
    double s = 0.0;
    for (int i = 1; i <= d; ++i) {
        s += digamma(0.5 * (c.v + 1.0 - i));
    }
    return s + d * std::log(2.0) + log_det_from_llt(safe_llt(c.w, "w_k"));
}

/// ln of the Wishart normalization constant B(W, v).
inline double log_wishart_b(const Eigen::MatrixXd& w, double v) {
    const auto d = static_cast<int>(w.rows());
    double lg = 0.0;
    for (int i = 1; i <= d; ++i) {
        lg += std::lgamma(0.5 * (v + 1.0 - i));
    }
    return -0.5 * v * log_det_from_llt(safe_llt(w, "wishart B"))
           - 0.5 * v * d * std::log(2.0)
           - 0.25 * d * (d - 1) * std::log(M_PI)
           - lg;
}

}  // namespace detail

/// One-hot responsibilities from a seeded K-Means assignment.
inline Responsibilities init_responsibilities(const Eigen::MatrixXd& data, int K, std::uint64_t seed) {
    const Eigen::Index n = data.rows();
    if (K < 1 || static_cast<Eigen::Index>(K) > n) {
        throw KTooLarge("init_responsibilities: need 1 <= K <= N");
    }
    const KMeansResult km = kmeans(data, K, seed);
    Responsibilities resp;
    resp.r = Eigen::MatrixXd::Zero(n, K);
    for (Eigen::Index i = 0; i < n; ++i) {
        resp.r(i, km.assignments[static_cast<std::size_t>(i)]) = 1.0;
    }
    return resp;
}

inline Responsibilities e_step(const Eigen::MatrixXd& data, const Hyperparameters& hyper,
                               const std::vector<ComponentPosterior>& components) {
    (void)hyper;
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.cols();
    const auto K = static_cast<Eigen::Index>(components.size());

    double alpha_sum = 0.0;
    for (const auto& c : components) {
        alpha_sum += c.alpha;
    }
    const double psi_alpha_sum = digamma(alpha_sum);

    Eigen::MatrixXd log_rho(n, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const ComponentPosterior& c = components[static_cast<std::size_t>(k)];
        const double e_log_pi = digamma(c.alpha) - psi_alpha_sum;
        const double e_log_det = detail::expected_log_det_lambda(c);
        const Eigen::MatrixXd centered = data.rowwise() - c.m.transpose();
        // v_k (x-m)^T W (x-m) per row
        const Eigen::VectorXd quad =
            ((centered * c.w).cwiseProduct(centered)).rowwise().sum();
        log_rho.col(k) = (e_log_pi + 0.5 * e_log_det - 0.5 * d * std::log(2.0 * M_PI)
                          - 0.5 * d / c.beta)
                             * Eigen::VectorXd::Ones(n)
                         - 0.5 * c.v * quad;
    }
    if (!log_rho.allFinite()) {
        throw NumericalFailure("e_step: non-finite log responsibilities");
    }

    Responsibilities resp;
    resp.r.resize(n, K);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lse = log_sum_exp(log_rho.row(i).transpose());
        for (Eigen::Index k = 0; k < K; ++k) {
            resp.r(i, k) = std::exp(log_rho(i, k) - lse);
        }
    }
    return resp;
}

inline std::pair<SufficientStats, std::vector<ComponentPosterior>>
m_step(const Eigen::MatrixXd& data, const Responsibilities& resp, const Hyperparameters& hyper) {
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.cols();
    const Eigen::Index K = resp.r.cols();
    hyper.validate(d);
    if (resp.r.rows() != n) {
        throw Error("m_step: responsibilities/data row mismatch");
    }

    SufficientStats stats;
    stats.Nk = resp.r.colwise().sum();
    stats.xbar.resize(K, d);
    stats.Sk.reserve(static_cast<std::size_t>(K));
    std::vector<ComponentPosterior> components(static_cast<std::size_t>(K));

    const Eigen::MatrixXd w0_inv = spd_inverse(hyper.w0, "w0");
    for (Eigen::Index k = 0; k < K; ++k) {
        const double nk = stats.Nk[k];
        ComponentPosterior& c = components[static_cast<std::size_t>(k)];
        if (nk < 1e-12) {
            // Empty component keeps its prior.
            stats.xbar.row(k) = hyper.m0.transpose();
            stats.Sk.push_back(Eigen::MatrixXd::Zero(d, d));
            c = {hyper.alpha0 + nk, hyper.beta0 + nk, hyper.m0, hyper.w0, hyper.v0 + nk};
            continue;
        }
        const Eigen::VectorXd xbar = data.transpose() * resp.r.col(k) / nk;
        stats.xbar.row(k) = xbar.transpose();
        const Eigen::MatrixXd centered = data.rowwise() - xbar.transpose();
        const Eigen::MatrixXd sk =
            symmetrize((centered.transpose() * resp.r.col(k).asDiagonal() * centered) / nk);
        stats.Sk.push_back(sk);

        c.alpha = hyper.alpha0 + nk;
        c.beta = hyper.beta0 + nk;
        c.v = hyper.v0 + nk;
        c.m = (hyper.beta0 * hyper.m0 + nk * xbar) / c.beta;
        const Eigen::VectorXd dm = xbar - hyper.m0;
        const Eigen::MatrixXd w_inv =
            symmetrize(w0_inv + nk * sk + (hyper.beta0 * nk / c.beta) * (dm * dm.transpose()));
        c.w = spd_inverse(w_inv, "m_step w_k");
    }
    return {std::move(stats), std::move(components)};
}

/// Variational lower bound F(q) for the current factorized posterior,
/// evaluated at the M-step point (stats consistent with resp).
inline double elbo(const Eigen::MatrixXd& data, const Responsibilities& resp, const Hyperparameters& hyper,
                   const std::vector<ComponentPosterior>& components, const SufficientStats& stats) {
    const Eigen::Index d = data.cols();
    const auto K = static_cast<Eigen::Index>(components.size());

    double alpha_sum = 0.0;
    for (const auto& c : components) {
        alpha_sum += c.alpha;
    }
    const double psi_alpha_sum = digamma(alpha_sum);
    const Eigen::MatrixXd w0_inv = spd_inverse(hyper.w0, "w0");
    const double log_b0 = detail::log_wishart_b(hyper.w0, hyper.v0);

    double e_log_px = 0.0;      // E[ln p(X|Z,mu,Lambda)]
    double e_log_pz = 0.0;      // E[ln p(Z|pi)]
    double e_log_ppi = 0.0;     // E[ln p(pi)]
    double e_log_pml = 0.0;     // E[ln p(mu,Lambda)]
    double e_log_qz = 0.0;      // E[ln q(Z)]
    double e_log_qpi = 0.0;     // E[ln q(pi)]
    double e_log_qml = 0.0;     // E[ln q(mu,Lambda)]

    for (Eigen::Index k = 0; k < K; ++k) {
        const ComponentPosterior& c = components[static_cast<std::size_t>(k)];
        const double nk = stats.Nk[k];
        const double e_log_pi = digamma(c.alpha) - psi_alpha_sum;
        const double e_log_det = detail::expected_log_det_lambda(c);
        const Eigen::VectorXd xbar = stats.xbar.row(k).transpose();
        const Eigen::MatrixXd& sk = stats.Sk[static_cast<std::size_t>(k)];

        const Eigen::VectorXd dxm = xbar - c.m;
        e_log_px += 0.5 * nk * (e_log_det - d / c.beta
                                - c.v * (sk * c.w).trace()
                                - c.v * dxm.dot(c.w * dxm)
                                - d * std::log(2.0 * M_PI));
        e_log_pz += nk * e_log_pi;
        e_log_ppi += (hyper.alpha0 - 1.0) * e_log_pi;

        const Eigen::VectorXd dm0 = c.m - hyper.m0;
        e_log_pml += 0.5 * (d * std::log(hyper.beta0 / (2.0 * M_PI)) + e_log_det
                            - d * hyper.beta0 / c.beta
                            - hyper.beta0 * c.v * dm0.dot(c.w * dm0));
        e_log_pml += 0.5 * (hyper.v0 - d - 1.0) * e_log_det - 0.5 * c.v * (w0_inv * c.w).trace();

        e_log_qpi += (c.alpha - 1.0) * e_log_pi;

        const double entropy_wishart = -detail::log_wishart_b(c.w, c.v)
                                       - 0.5 * (c.v - d - 1.0) * e_log_det + 0.5 * c.v * d;
        e_log_qml += 0.5 * e_log_det + 0.5 * d * std::log(c.beta / (2.0 * M_PI))
                     - 0.5 * d - entropy_wishart;
    }
    e_log_pml += K * log_b0;
    // Dirichlet normalizers ln C(alpha).
    e_log_ppi += std::lgamma(K * hyper.alpha0) - K * std::lgamma(hyper.alpha0);
    double lg_sum = 0.0;
    for (const auto& c : components) {
        lg_sum += std::lgamma(c.alpha);
    }
    e_log_qpi += std::lgamma(alpha_sum) - lg_sum;

    for (Eigen::Index i = 0; i < resp.r.rows(); ++i) {
        for (Eigen::Index k = 0; k < K; ++k) {
            const double r = resp.r(i, k);
            if (r > 0.0) {
                e_log_qz += r * std::log(r);
            }
        }
    }

    const double value = e_log_px + e_log_pz + e_log_ppi + e_log_pml
                         - e_log_qz - e_log_qpi - e_log_qml;
    if (!std::isfinite(value)) {
        throw NumericalFailure("elbo: non-finite value");
    }
    return value;
}

/// VBEM: K-Means one-hot init, then alternating M/E updates with the ELBO
/// recorded after every M-step; stops on relative ELBO change below tol.
inline VbGmmModel fit(const Eigen::MatrixXd& data, int K, const Hyperparameters& hyper,
                      double tol, int max_iter, std::uint64_t seed) {
    const Eigen::Index n = data.rows();
    if (K < 1 || static_cast<Eigen::Index>(K) > n) {
        throw KTooLarge("fit: need 1 <= K <= N");
    }
    if (!(tol > 0.0)) {
        throw Error("fit: tol must be > 0");
    }
    hyper.validate(data.cols());

    VbGmmModel model;
    model.K = K;
    model.D = static_cast<int>(data.cols());
    model.hyper = hyper;
    model.seed = seed;

    Responsibilities resp = init_responsibilities(data, K, seed);
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int iter = 0; iter < max_iter; ++iter) {
        auto [stats, components] = m_step(data, resp, hyper);
        const double value = elbo(data, resp, hyper, components, stats);
        model.elbo_trace.push_back(value);
        model.components = std::move(components);
        if (std::isfinite(prev) && std::abs(value - prev) < tol * std::abs(value)) {
            model.converged = true;
            break;
        }
        prev = value;
        resp = e_step(data, hyper, model.components);
    }
    return model;
}

/// Number of components whose expected mixing weight (N_k / N) stays at or
/// above the floor.
inline int effective_components(const VbGmmModel& model, double weight_floor) {
    if (!(weight_floor >= 0.0 && weight_floor < 1.0)) {
        throw Error("effective_components: weight_floor must be in [0,1)");
    }
    double n_total = 0.0;
    for (const auto& c : model.components) {
        n_total += c.alpha - model.hyper.alpha0;
    }
    if (n_total <= 0.0) {
        return 0;
    }
    int count = 0;
    for (const auto& c : model.components) {
        if ((c.alpha - model.hyper.alpha0) / n_total >= weight_floor) {
            ++count;
        }
    }
    return count;
}

}  // namespace trajpred
