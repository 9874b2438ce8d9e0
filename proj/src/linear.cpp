#include "raest/linear.hpp"

#include "raest/errors.hpp"
#include "raest/inference.hpp"

#include <string>

namespace raest {
namespace {

constexpr double kRankThreshold = 1e-10;

std::string arm_name(const Dataset& ds, int g) {
  return "arm '" + ds.arm_labels()[static_cast<std::size_t>(g)] + "'";
}

std::optional<std::vector<OlsFit>> try_per_arm_ols(const Dataset& ds) {
  try {
    return per_arm_ols(ds, 0);
  } catch (const Error&) {
    return std::nullopt;
  }
}

struct SeparateBlocks {
  Eigen::MatrixXd k;  // Xdot_i beta_g
  Eigen::MatrixXd q;  // W_ig U_i(g) / rho_g
};

SeparateBlocks separate_blocks(const Dataset& ds, const std::vector<OlsFit>& fits,
                               const Eigen::MatrixXd& centered, const Eigen::VectorXd& rho) {
  const Eigen::Index n = ds.n();
  const int arms = ds.arms();
  const Eigen::Index k = ds.covariate_count();
  SeparateBlocks out{Eigen::MatrixXd::Zero(n, arms), Eigen::MatrixXd::Zero(n, arms)};
  for (int g = 0; g < arms; ++g) {
    const OlsFit& fit = fits[static_cast<std::size_t>(g)];
    if (k > 0) out.k.col(g) = centered * fit.coefficients.tail(k);
    const auto rows = ds.arm_rows(g);
    for (std::size_t r = 0; r < rows.size(); ++r)
      out.q(rows[r], g) = fit.residuals(static_cast<Eigen::Index>(r)) / rho(g);
  }
  return out;
}

EstimatorResult base_result(const Dataset& ds, EstimatorId id) {
  EstimatorResult r;
  r.estimator_id = id;
  r.group_sizes = ds.arm_sizes();
  r.rho_hat = ds.rho_hat();
  return r;
}

}  // namespace

OlsFit ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
  const Eigen::Index m = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != m) throw Error(ErrorCode::DimensionMismatch, "ols: y and X row counts differ");
  OlsFit fit;
  if (p == 0) {
    fit.coefficients.resize(0);
    fit.residuals = y;
    fit.xtx_inverse.resize(0, 0);
    return fit;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankThreshold);
  fit.design_rank = qr.rank();
  if (fit.design_rank < p) {
    const int column = static_cast<int>(qr.colsPermutation().indices()(fit.design_rank));
    throw Error(ErrorCode::RankDeficient,
                "design has rank " + std::to_string(fit.design_rank) + " < " + std::to_string(p) +
                    "; column " + std::to_string(column + 1) + " is linearly dependent",
                std::nullopt, column);
  }
  fit.coefficients = qr.solve(y);
  fit.residuals = y - x * fit.coefficients;

  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  fit.xtx_inverse = perm * inner * perm.transpose();
  return fit;
}

Eigen::MatrixXd intercept_design(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd z(static_cast<Eigen::Index>(rows.size()), x.cols() + 1);
  z.col(0).setOnes();
  for (std::size_t r = 0; r < rows.size(); ++r)
    z.row(static_cast<Eigen::Index>(r)).tail(x.cols()) = x.row(rows[r]);
  return z;
}

std::vector<OlsFit> per_arm_ols(const Dataset& ds, Eigen::Index min_extra_rows) {
  const Eigen::Index k = ds.covariate_count();
  std::vector<OlsFit> fits;
  fits.reserve(static_cast<std::size_t>(ds.arms()));
  for (int g = 0; g < ds.arms(); ++g) {
    const Eigen::Index size = ds.arm_sizes()[static_cast<std::size_t>(g)];
    if (size < k + 1 + min_extra_rows) {
      throw Error(ErrorCode::ArmTooSmall,
                  arm_name(ds, g) + " has " + std::to_string(size) + " observations; need at least " +
                      std::to_string(k + 1 + min_extra_rows),
                  g);
    }
    const auto rows = ds.arm_rows(g);
    try {
      fits.push_back(ols(take_rows(ds.outcome(), rows), intercept_design(ds.covariates(), rows)));
    } catch (const Error& e) {
      throw Error(e.code(), arm_name(ds, g) + ": " + e.what(), g, e.column());
    }
  }
  return fits;
}

Estimate estimate_sm(const Dataset& ds) {
  const Eigen::Index n = ds.n();
  const int arms = ds.arms();
  Estimate est;
  est.result = base_result(ds, EstimatorId::SM);
  const Eigen::VectorXd& rho = est.result.rho_hat;

  Eigen::VectorXd sums = Eigen::VectorXd::Zero(arms);
  for (Eigen::Index i = 0; i < n; ++i) sums(ds.group(i)) += ds.outcome()(i);
  est.result.mu_hat.resize(arms);
  for (int g = 0; g < arms; ++g) {
    est.result.mu_hat(g) = sums(g) / static_cast<double>(ds.arm_sizes()[static_cast<std::size_t>(g)]);
    est.result.coefficients.push_back(
        {"mean " + ds.arm_labels()[static_cast<std::size_t>(g)],
         Eigen::VectorXd::Constant(1, est.result.mu_hat(g))});
  }

  est.influence.kind = InfluenceKind::LinearSM;
  est.influence.rows = Eigen::MatrixXd::Zero(n, arms);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int g = ds.group(i);
    est.influence.rows(i, g) = (ds.outcome()(i) - est.result.mu_hat(g)) / rho(g);
  }

  if (ds.covariate_count() == 0) {
    est.influence.blocks["L"] = Eigen::MatrixXd::Zero(n, arms);
    est.influence.blocks["Q"] = est.influence.rows;
  } else if (const auto fits = try_per_arm_ols(ds)) {
    const auto centered = demean_covariates(ds);
    SeparateBlocks b = separate_blocks(ds, *fits, centered.centered, rho);
    // L is W_g (X_i - Xbar_g) beta_g / rho_g: the part of the row the
    // per-arm projection explains.
    est.influence.blocks["L"] = est.influence.rows - b.q;
    est.influence.blocks["Q"] = std::move(b.q);
  }
  est.result.vcov = vcov_from_influence(est.influence);
  return est;
}

Estimate estimate_sra(const Dataset& ds) {
  const Eigen::Index k = ds.covariate_count();
  const int arms = ds.arms();
  const auto fits = per_arm_ols(ds, 1);
  const auto centered = demean_covariates(ds);

  Estimate est;
  est.result = base_result(ds, EstimatorId::SRA);
  est.result.mu_hat.resize(arms);
  for (int g = 0; g < arms; ++g) {
    const Eigen::VectorXd& c = fits[static_cast<std::size_t>(g)].coefficients;
    est.result.mu_hat(g) = c(0) + (k > 0 ? centered.mean.dot(c.tail(k)) : 0.0);
    est.result.coefficients.push_back({"arm " + ds.arm_labels()[static_cast<std::size_t>(g)], c});
  }

  SeparateBlocks b = separate_blocks(ds, fits, centered.centered, est.result.rho_hat);
  est.influence.kind = InfluenceKind::LinearSRA;
  est.influence.rows = b.k + b.q;
  est.influence.blocks["K"] = std::move(b.k);
  est.influence.blocks["Q"] = std::move(b.q);
  est.result.vcov = vcov_from_influence(est.influence);
  return est;
}

Estimate estimate_pra(const Dataset& ds) {
  const Eigen::Index n = ds.n();
  const Eigen::Index k = ds.covariate_count();
  const int arms = ds.arms();
  if (n < arms + k + 1) {
    throw Error(ErrorCode::DegenerateSample, "pooled RA needs N >= G + K + 1 (N = " +
                                                 std::to_string(n) + ")");
  }
  const auto centered = demean_covariates(ds);
  Eigen::MatrixXd design(n, arms + k);
  design.leftCols(arms) = ds.indicators();
  design.rightCols(k) = centered.centered;
  const OlsFit fit = ols(ds.outcome(), design);

  Estimate est;
  est.result = base_result(ds, EstimatorId::PRA);
  est.result.mu_hat = fit.coefficients.head(arms);
  est.result.coefficients.push_back({"pooled", fit.coefficients});
  const Eigen::VectorXd pooled_slope = fit.coefficients.tail(k);

  // Stacked moments: pooled OLS score D_i'U_i plus the covariate-mean
  // moment, which enters mu_g = gamma_g + Xbar beta as Xdot_i beta.
  const Eigen::MatrixXd score = design.array().colwise() * fit.residuals.array();
  const Eigen::MatrixXd bread = fit.xtx_inverse.leftCols(arms) * static_cast<double>(n);
  est.influence.kind = InfluenceKind::LinearPRA;
  est.influence.rows = score * bread;
  if (k > 0) est.influence.rows.colwise() += centered.centered * pooled_slope;

  if (const auto fits = try_per_arm_ols(ds)) {
    SeparateBlocks b = separate_blocks(ds, *fits, centered.centered, est.result.rho_hat);
    est.influence.blocks["F"] = est.influence.rows - b.k - b.q;
    est.influence.blocks["K"] = std::move(b.k);
    est.influence.blocks["Q"] = std::move(b.q);
  }
  est.result.vcov = vcov_from_influence(est.influence);
  return est;
}

}  // namespace raest
