#include "raest/dataset.hpp"

#include "raest/errors.hpp"

#include <cmath>
#include <unordered_map>
#include <utility>

namespace raest {

Dataset::Dataset(std::vector<int> group, Eigen::VectorXd outcome,
                 std::optional<Eigen::VectorXd> trials, Eigen::MatrixXd covariates,
                 std::vector<std::string> covariate_names,
                 std::vector<std::string> arm_labels)
    : group_(std::move(group)),
      outcome_(std::move(outcome)),
      trials_(std::move(trials)),
      covariates_(std::move(covariates)),
      covariate_names_(std::move(covariate_names)),
      arm_labels_(std::move(arm_labels)) {
  const auto n = static_cast<Eigen::Index>(group_.size());
  if (n == 0) throw Error(ErrorCode::EmptyArm, "dataset has no rows");
  if (arm_labels_.empty()) throw Error(ErrorCode::EmptyArm, "dataset declares no arms");
  if (outcome_.size() != n || covariates_.rows() != n ||
      (trials_ && trials_->size() != n)) {
    throw Error(ErrorCode::DimensionMismatch, "dataset columns have different lengths");
  }
  if (static_cast<Eigen::Index>(covariate_names_.size()) != covariates_.cols()) {
    covariate_names_.clear();
    for (Eigen::Index k = 0; k < covariates_.cols(); ++k)
      covariate_names_.push_back("x" + std::to_string(k + 1));
  }

  const int arms = static_cast<int>(arm_labels_.size());
  arm_sizes_.assign(static_cast<std::size_t>(arms), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int g = group_[static_cast<std::size_t>(i)];
    if (g < 0 || g >= arms) {
      throw Error(ErrorCode::DimensionMismatch,
                  "row " + std::to_string(i + 1) + " has arm index out of range");
    }
    ++arm_sizes_[static_cast<std::size_t>(g)];
  }
  for (int g = 0; g < arms; ++g) {
    if (arm_sizes_[static_cast<std::size_t>(g)] == 0) {
      throw Error(ErrorCode::EmptyArm,
                  "arm '" + arm_labels_[static_cast<std::size_t>(g)] + "' has no observations", g);
    }
  }

  if (!outcome_.allFinite()) throw Error(ErrorCode::NonFinite, "outcome has non-finite values");
  for (Eigen::Index k = 0; k < covariates_.cols(); ++k) {
    if (!covariates_.col(k).allFinite()) {
      throw Error(ErrorCode::NonFinite,
                  "covariate '" + covariate_names_[static_cast<std::size_t>(k)] +
                      "' has non-finite values",
                  std::nullopt, static_cast<int>(k));
    }
  }
  if (trials_) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double b = (*trials_)(i);
      if (!std::isfinite(b) || b <= 0.0 || b != std::floor(b)) {
        throw Error(ErrorCode::TrialsViolation,
                    "row " + std::to_string(i + 1) + ": trials must be a positive integer");
      }
      if (outcome_(i) < 0.0 || outcome_(i) > b) {
        throw Error(ErrorCode::TrialsViolation,
                    "row " + std::to_string(i + 1) + ": outcome outside [0, trials]");
      }
    }
  }
}

Eigen::VectorXd Dataset::rho_hat() const {
  Eigen::VectorXd rho(arms());
  for (int g = 0; g < arms(); ++g)
    rho(g) = static_cast<double>(arm_sizes_[static_cast<std::size_t>(g)]) /
             static_cast<double>(n());
  return rho;
}

Eigen::MatrixXd Dataset::indicators() const {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n(), arms());
  for (Eigen::Index i = 0; i < n(); ++i) w(i, group(i)) = 1.0;
  return w;
}

std::vector<Eigen::Index> Dataset::arm_rows(int g) const {
  std::vector<Eigen::Index> rows;
  rows.reserve(static_cast<std::size_t>(arm_sizes_.at(static_cast<std::size_t>(g))));
  for (Eigen::Index i = 0; i < n(); ++i)
    if (group(i) == g) rows.push_back(i);
  return rows;
}

Dataset validate_dataset(const RawTable& raw, const ValidateOptions& options) {
  const std::size_t n = raw.group.size();
  if (raw.outcome.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "group and outcome columns differ in length");
  }
  if (raw.covariates.size() != raw.covariate_names.size()) {
    throw Error(ErrorCode::DimensionMismatch, "covariate names do not match covariate columns");
  }

  std::vector<std::string> labels;
  std::unordered_map<std::string, int> index;
  if (options.label_order) {
    labels = *options.label_order;
    for (std::size_t g = 0; g < labels.size(); ++g) {
      if (!index.emplace(labels[g], static_cast<int>(g)).second) {
        throw Error(ErrorCode::UsageError, "duplicate arm label '" + labels[g] + "'");
      }
    }
  }
  std::vector<int> group(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = index.find(raw.group[i]);
    if (it == index.end()) {
      if (options.label_order) {
        throw Error(ErrorCode::ParseError, "row " + std::to_string(i + 1) +
                                               ": unknown arm label '" + raw.group[i] + "'");
      }
      it = index.emplace(raw.group[i], static_cast<int>(labels.size())).first;
      labels.push_back(raw.group[i]);
    }
    group[i] = it->second;
  }

  const auto rows = static_cast<Eigen::Index>(n);
  Eigen::VectorXd outcome = Eigen::Map<const Eigen::VectorXd>(raw.outcome.data(), rows);
  std::optional<Eigen::VectorXd> trials;
  if (raw.trials) {
    if (raw.trials->size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "trials column has the wrong length");
    }
    trials = Eigen::Map<const Eigen::VectorXd>(raw.trials->data(), rows);
  }
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(raw.covariates.size()));
  for (std::size_t k = 0; k < raw.covariates.size(); ++k) {
    if (raw.covariates[k].size() != n) {
      throw Error(ErrorCode::DimensionMismatch,
                  "covariate '" + raw.covariate_names[k] + "' has the wrong length");
    }
    x.col(static_cast<Eigen::Index>(k)) =
        Eigen::Map<const Eigen::VectorXd>(raw.covariates[k].data(), rows);
  }
  return Dataset(std::move(group), std::move(outcome), std::move(trials), std::move(x),
                 raw.covariate_names, std::move(labels));
}

CenteredCovariates demean_covariates(const Dataset& ds) {
  const Eigen::MatrixXd& x = ds.covariates();
  CenteredCovariates out;
  out.mean = x.colwise().mean().transpose();
  out.centered = x.rowwise() - out.mean.transpose();
  // second pass removes the rounding left in the first mean
  const Eigen::VectorXd residual_mean = out.centered.colwise().mean().transpose();
  out.centered.rowwise() -= residual_mean.transpose();
  out.mean += residual_mean;
  return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, std::span<const Eigen::Index> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(rows[r]);
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& v, std::span<const Eigen::Index> rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = v(rows[r]);
  return out;
}

}  // namespace raest
