#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace raest {

enum class EstimatorId { SM, PRA, SRA, NPRA, NSRA };

enum class FamilyId { GaussianLinear, BernoulliLogistic, BinomialLogistic, PoissonExponential };

std::string_view to_string(EstimatorId id) noexcept;
std::string_view to_string(FamilyId id) noexcept;
/// Accepts upper or lower case ("sm", "NSRA", ...).
std::optional<EstimatorId> parse_estimator(std::string_view text);
/// Accepts the canonical names ("bernoulli-logistic", ...) and the short
/// aliases gaussian / linear, logit / bernoulli, binomial, poisson.
std::optional<FamilyId> parse_family(std::string_view text);

/// One named block of fitted coefficients: an arm's (intercept, slopes) or
/// the pooled (arm intercepts, shared slopes).
struct CoefficientRecord {
  std::string label;
  Eigen::VectorXd values;
};

struct EstimatorResult {
  EstimatorId estimator_id = EstimatorId::SM;
  std::optional<FamilyId> family;
  Eigen::VectorXd mu_hat;
  /// Estimated covariance of mu_hat (Avar / N).
  Eigen::MatrixXd vcov;
  std::vector<Eigen::Index> group_sizes;
  Eigen::VectorXd rho_hat;
  std::vector<CoefficientRecord> coefficients;

  int arms() const noexcept { return static_cast<int>(mu_hat.size()); }
  /// sqrt(diag(vcov)).
  Eigen::VectorXd standard_errors() const;
};

enum class InfluenceKind { LinearSM, LinearSRA, LinearPRA, QmleSRA, QmleNPRA };

std::string_view to_string(InfluenceKind kind) noexcept;

/// Per-observation influence contributions. `rows` holds one row per unit;
/// `blocks` holds the named additive components whose sum is `rows`
/// (L+Q for SM, K+Q for SRA, F+K+Q for PRA, H+J for the QMLE estimators).
struct InfluenceDecomposition {
  InfluenceKind kind = InfluenceKind::LinearSM;
  Eigen::MatrixXd rows;
  std::map<std::string, Eigen::MatrixXd> blocks;

  /// Sum of all stored blocks, or nullopt when none are stored.
  std::optional<Eigen::MatrixXd> block_sum() const;
};

struct Estimate {
  EstimatorResult result;
  InfluenceDecomposition influence;
};

}  // namespace raest
