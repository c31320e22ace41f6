#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "trajpred/errors.hpp"

namespace trajpred {

/// Digamma via upward recurrence to x >= 6, then the Bernoulli asymptotic
/// series. Absolute error below ~2e-13 for x >= 0.25.
inline double digamma(double x) {
    if (!(x > 0.0)) {
        throw NumericalFailure("digamma requires x > 0");
    }
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // ln x - 1/(2x) - sum B_2n / (2n x^{2n}), terms through x^{-14}
    const double series = inv2 * (1.0 / 12.0
             + inv2 * (-1.0 / 120.0
             + inv2 * (1.0 / 252.0
             + inv2 * (-1.0 / 240.0
             + inv2 * (1.0 / 132.0
             + inv2 * (-691.0 / 32760.0
             + inv2 * (1.0 / 12.0)))))));
    return result + std::log(x) - 0.5 * inv - series;
}

/// lnGamma((nu+d)/2) - lnGamma(nu/2), switching to a Stirling-difference form
/// for large nu where direct lgamma subtraction loses absolute precision.
inline double lgamma_half_ratio(double nu, int d) {
    const double x = 0.5 * nu;
    const double a = 0.5 * static_cast<double>(d);
    if (x < 1e7) {
        return std::lgamma(x + a) - std::lgamma(x);
    }
    // (x+a-1/2)ln(x+a) - (x-1/2)ln x - a + 1/12 (1/(x+a) - 1/x) + O(x^-3)
    return a * std::log(x) + (x + a - 0.5) * std::log1p(a / x) - a
           + (1.0 / 12.0) * (1.0 / (x + a) - 1.0 / x);
}

inline double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) {
        return m;  // all -inf stays -inf
    }
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        s += std::exp(v[i] - m);
    }
    return m + std::log(s);
}

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
    return 0.5 * (a + a.transpose());
}

/// Cholesky with the project-wide jitter policy: on failure add
/// 1e-9 * trace/D to the diagonal, retry up to 3 times, then fail.
inline Eigen::LLT<Eigen::MatrixXd> safe_llt(Eigen::MatrixXd a, const char* what) {
    const Eigen::Index d = a.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
        return llt;
    }
    const double jitter = 1e-9 * a.trace() / static_cast<double>(d);
    for (int attempt = 0; attempt < 3; ++attempt) {
        a += jitter * Eigen::MatrixXd::Identity(d, d);
        llt.compute(a);
        if (llt.info() == Eigen::Success) {
            return llt;
        }
    }
    throw NumericalFailure(std::string(what) + ": matrix not positive-definite after jitter");
}

inline double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// Inverse of a symmetric positive-definite matrix, symmetrized.
inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* what) {
    const auto llt = safe_llt(a, what);
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
    return symmetrize(inv);
}

}  // namespace trajpred
