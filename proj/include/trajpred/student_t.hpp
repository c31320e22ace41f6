#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "trajpred/errors.hpp"
#include "trajpred/math.hpp"

namespace trajpred {

/// Log density of the multivariate Student-t with precision-parameterized
/// scale:
///   ln St(x | m, P, nu) = lnG((nu+D)/2) - lnG(nu/2) - (D/2) ln(nu pi)
///                         + (1/2) ln|P| - ((nu+D)/2) ln(1 + delta/nu)
/// with delta = (x-m)^T P (x-m).
inline double student_t_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& precision, double dof) {
    if (!(dof > 0.0)) {
        throw NumericalFailure("student_t_logpdf: dof must be > 0");
    }
    const auto d = static_cast<int>(x.size());
    const auto llt = safe_llt(precision, "student_t_logpdf");
    const Eigen::VectorXd diff = x - mean;
    // delta as a squared norm of the Cholesky factor keeps it non-negative.
    const double delta = (llt.matrixU() * diff).squaredNorm();
    const double lp = lgamma_half_ratio(dof, d)
                      - 0.5 * d * std::log(dof * M_PI)
                      + 0.5 * log_det_from_llt(llt)
                      - 0.5 * (dof + d) * std::log1p(delta / dof);
    if (!std::isfinite(lp)) {
        throw NumericalFailure("student_t_logpdf: non-finite result");
    }
    return lp;
}

}  // namespace trajpred
