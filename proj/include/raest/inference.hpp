#pragma once

#include "raest/estimate.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace raest {

/// Scalar target tau defined from the mean vector, either linearly through
/// a weight vector or through a smooth function of mu.
struct Contrast {
  using Function = std::function<double(const Eigen::VectorXd&)>;
  using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  std::string name;
  std::optional<Eigen::VectorXd> weights;
  Function function;
  /// Analytic gradient of `function`; central differences when empty.
  Gradient gradient;

  bool is_linear() const noexcept { return weights.has_value(); }

  static Contrast linear(std::string name, Eigen::VectorXd weights);
  static Contrast smooth(std::string name, Function function, Gradient gradient = {});
};

/// mu_g - mu_1 for g = 2..G, named "ate(<label g> - <label 1>)" when labels
/// are given.
std::vector<Contrast> ate_contrasts(int arms, const std::vector<std::string>& labels = {});
/// (mu_TA - mu_TB) - (mu_CA - mu_CB) with arms ordered CB, CA, TB, TA.
Contrast did_contrast();
/// mu_numerator / mu_denominator (zero-based arm indices), analytic gradient.
Contrast ratio_contrast(int arms, int numerator, int denominator);

struct ContrastResult {
  double tau_hat = 0.0;
  double se = 0.0;
  Contrast contrast;
  EstimatorId source = EstimatorId::SM;
};

struct PsdReport {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  bool is_psd = false;
  std::string matrix_label;
};

inline constexpr double kPsdTolerance = 1e-8;

/// (1/n^2) sum_i r_i r_i' over column-centred influence rows.
Eigen::MatrixXd vcov_from_influence(const Eigen::MatrixXd& rows);
Eigen::MatrixXd vcov_from_influence(const InfluenceDecomposition& influence);

/// Linear contrasts: tau = a'mu, se = sqrt(a'Va). Smooth contrasts: delta
/// method with the analytic gradient, or central differences with step
/// 1e-6 * max(1, |mu_g|).
ContrastResult contrast_estimate(const EstimatorResult& result, const Contrast& contrast);

/// Eigen-decomposition of the symmetrised difference vA - vB.
PsdReport psd_compare(const Eigen::MatrixXd& va, const Eigen::MatrixXd& vb, std::string label);

}  // namespace raest
