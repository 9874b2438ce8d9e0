#pragma once

#include "raest/dataset.hpp"
#include "raest/estimate.hpp"

#include <Eigen/Dense>

#include <optional>

namespace raest {

/// Canonical mean / quasi-log-likelihood pair from the linear exponential
/// family. For the binomial family the mean of Y is B * m(z).
class Family {
 public:
  explicit Family(FamilyId id) noexcept : id_(id) {}

  FamilyId id() const noexcept { return id_; }
  double mean(double z) const noexcept;
  double mean_derivative(double z) const noexcept;
  /// Quasi-log-likelihood contribution of one row with trial count b.
  double qll(double y, double z, double b) const noexcept;
  bool uses_trials() const noexcept { return id_ == FamilyId::BinomialLogistic; }
  /// Throws TrialsViolation when an outcome lies outside the support.
  void check_support(const Eigen::VectorXd& y, const Eigen::VectorXd* trials) const;

 private:
  FamilyId id_;
};

struct QmleFit {
  Eigen::VectorXd coefficients;
  int iterations = 0;
  bool converged = false;
  /// Sup-norm of X'(y - B m) at the returned coefficients.
  double score_norm = 0.0;
  double qll = 0.0;
  /// X' diag(B m'(Xb)) X at the returned coefficients.
  Eigen::MatrixXd weighted_hessian;
};

struct QmleOptions {
  int max_iterations = 100;
  int max_halvings = 20;
  double score_tolerance = 1e-8;
  double qll_tolerance = 1e-12;
  /// Logistic fits with a coefficient beyond this magnitude are reported
  /// as separated.
  double separation_bound = 30.0;
};

/// Newton / IRLS maximisation of the family's quasi-log-likelihood with step
/// halving. `trials` is required for the binomial family and ignored
/// otherwise.
QmleFit qmle_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Family& family,
                 const Eigen::VectorXd* trials = nullptr, const QmleOptions& options = {});

enum class NsraVcov {
  /// H + J rows with the full-sample curvature matrix.
  Influence,
  /// Stacked M-estimation sandwich using each arm's own Hessian.
  RobustSandwich,
};

/// Separate nonlinear RA: per-arm QMLE of Y on (1, X), with fitted means
/// averaged over the whole sample.
Estimate estimate_nsra(const Dataset& ds, const Family& family,
                       NsraVcov vcov = NsraVcov::Influence, const QmleOptions& options = {});

/// Pooled nonlinear RA: one QMLE of Y on the arm indicators and X, with the
/// covariance from the sandwich that stacks the score and the mean-recovery
/// moments.
Estimate estimate_npra(const Dataset& ds, const Family& family, const QmleOptions& options = {});

}  // namespace raest
