#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace raest {

/// Column-oriented table as it arrives from a file or a caller, before any
/// validation. Arm labels are kept as text so bids, integers and names are
/// all handled the same way.
struct RawTable {
  std::vector<std::string> group;
  std::vector<double> outcome;
  std::optional<std::vector<double>> trials;
  std::vector<std::string> covariate_names;
  std::vector<std::vector<double>> covariates;  // one vector per column
};

struct ValidateOptions {
  /// Explicit arm order. When absent, arms are numbered by first appearance.
  /// When present, its length is the declared number of arms and every
  /// group value must be one of these labels.
  std::optional<std::vector<std::string>> label_order;
};

/// Immutable observed sample: one arm index, outcome, optional binomial
/// trial count and covariate row per unit. Arms are stored zero-based; the
/// label map recovers the user's names.
class Dataset {
 public:
  /// Validates every invariant; throws raest::Error on violation.
  Dataset(std::vector<int> group, Eigen::VectorXd outcome,
          std::optional<Eigen::VectorXd> trials, Eigen::MatrixXd covariates,
          std::vector<std::string> covariate_names,
          std::vector<std::string> arm_labels);

  Eigen::Index n() const noexcept { return outcome_.size(); }
  int arms() const noexcept { return static_cast<int>(arm_labels_.size()); }
  Eigen::Index covariate_count() const noexcept { return covariates_.cols(); }

  std::span<const int> groups() const noexcept { return group_; }
  int group(Eigen::Index i) const { return group_[static_cast<std::size_t>(i)]; }
  const Eigen::VectorXd& outcome() const noexcept { return outcome_; }
  const std::optional<Eigen::VectorXd>& trials() const noexcept { return trials_; }
  const Eigen::MatrixXd& covariates() const noexcept { return covariates_; }
  const std::vector<std::string>& covariate_names() const noexcept {
    return covariate_names_;
  }
  const std::vector<std::string>& arm_labels() const noexcept { return arm_labels_; }

  const std::vector<Eigen::Index>& arm_sizes() const noexcept { return arm_sizes_; }
  /// N_g / N.
  Eigen::VectorXd rho_hat() const;
  /// n x G one-hot matrix of arm indicators.
  Eigen::MatrixXd indicators() const;
  /// Row indices belonging to arm g, in dataset order.
  std::vector<Eigen::Index> arm_rows(int g) const;

 private:
  std::vector<int> group_;
  Eigen::VectorXd outcome_;
  std::optional<Eigen::VectorXd> trials_;
  Eigen::MatrixXd covariates_;
  std::vector<std::string> covariate_names_;
  std::vector<std::string> arm_labels_;
  std::vector<Eigen::Index> arm_sizes_;
};

Dataset validate_dataset(const RawTable& raw, const ValidateOptions& options = {});

struct CenteredCovariates {
  Eigen::MatrixXd centered;
  Eigen::VectorXd mean;
};

/// Subtracts the full-sample column means.
CenteredCovariates demean_covariates(const Dataset& ds);

/// Gathers the listed rows of a matrix / vector.
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, std::span<const Eigen::Index> rows);
Eigen::VectorXd take_rows(const Eigen::VectorXd& v, std::span<const Eigen::Index> rows);

}  // namespace raest
