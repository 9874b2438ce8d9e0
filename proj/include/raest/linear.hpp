#pragma once

#include "raest/dataset.hpp"
#include "raest/estimate.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace raest {

struct OlsFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd residuals;
  Eigen::Index design_rank = 0;
  /// (X'X)^{-1}
  Eigen::MatrixXd xtx_inverse;
};

/// Least squares by column-pivoting Householder QR. Throws RankDeficient
/// naming the first dependent column in pivot order.
OlsFit ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x);

/// Design (1, X) for the listed rows.
Eigen::MatrixXd intercept_design(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& rows);

/// Per-arm regressions of Y on (1, X). Throws ArmTooSmall when an arm has
/// fewer than `min_extra_rows` + K + 1 observations.
std::vector<OlsFit> per_arm_ols(const Dataset& ds, Eigen::Index min_extra_rows);

/// Subsample means. Rows are W_g (Y - Ybar_g) / rho_g; the L and Q blocks
/// are stored when every arm supports a per-arm regression on X.
Estimate estimate_sm(const Dataset& ds);

/// Separate regression adjustment: per-arm OLS imputed at the full-sample
/// covariate mean. Requires N_g >= K + 2.
Estimate estimate_sra(const Dataset& ds);

/// Pooled regression adjustment: Y on the arm indicators and the centred
/// covariates. Covariance from the stacked-moment sandwich that also treats
/// the covariate mean as estimated.
Estimate estimate_pra(const Dataset& ds);

}  // namespace raest
