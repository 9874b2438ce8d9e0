#include "raest/qmle.hpp"

#include "raest/errors.hpp"
#include "raest/inference.hpp"
#include "raest/kernels.hpp"
#include "raest/linear.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace raest {
namespace {

double logistic(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

bool is_logistic(FamilyId id) noexcept {
  return id == FamilyId::BernoulliLogistic || id == FamilyId::BinomialLogistic;
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

struct Evaluation {
  double qll = 0.0;
  Eigen::VectorXd score;
  Eigen::VectorXd weights;  // B m'(z)
};

Evaluation evaluate(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Family& family,
                    const Eigen::VectorXd& b, const Eigen::VectorXd& coef, bool with_score) {
  const Eigen::VectorXd z = x * coef;
  const Eigen::Index m = y.size();
  Evaluation ev;
  Eigen::VectorXd resid(m);
  ev.weights.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    ev.qll += family.qll(y(i), z(i), b(i));
    resid(i) = y(i) - b(i) * family.mean(z(i));
    ev.weights(i) = b(i) * family.mean_derivative(z(i));
  }
  if (with_score) ev.score = kernels::cross(x, resid);
  return ev;
}

Eigen::VectorXd starting_values(const Eigen::VectorXd& y, const Eigen::MatrixXd& x,
                                const Family& family, const Eigen::VectorXd& b) {
  Eigen::VectorXd t(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    switch (family.id()) {
      case FamilyId::GaussianLinear: t(i) = y(i); break;
      case FamilyId::BernoulliLogistic:
      case FamilyId::BinomialLogistic: {
        const double p = std::clamp(y(i) / b(i), 0.01, 0.99);
        t(i) = std::log(p / (1.0 - p));
        break;
      }
      case FamilyId::PoissonExponential: t(i) = std::log(std::max(y(i), 0.01)); break;
    }
  }
  return ols(t, x).coefficients;
}

void check_separation(const Family& family, const Eigen::VectorXd& coef, double bound,
                      double score_norm) {
  if (is_logistic(family.id()) && sup_norm(coef) > bound) {
    throw Error(ErrorCode::Separation,
                "fitted probabilities are pinned at 0 or 1 (max |coefficient| " +
                    std::to_string(sup_norm(coef)) + ", score norm " + std::to_string(score_norm) +
                    ")");
  }
}

std::string arm_prefix(const Dataset& ds, int g) {
  return "arm '" + ds.arm_labels()[static_cast<std::size_t>(g)] + "': ";
}

Eigen::VectorXd trial_counts(const Dataset& ds, const Family& family) {
  if (family.uses_trials()) {
    if (!ds.trials()) {
      throw Error(ErrorCode::MissingColumn, "the binomial family needs a trials column");
    }
    return *ds.trials();
  }
  return Eigen::VectorXd::Ones(ds.n());
}

EstimatorResult base_result(const Dataset& ds, EstimatorId id, const Family& family) {
  EstimatorResult r;
  r.estimator_id = id;
  r.family = family.id();
  r.group_sizes = ds.arm_sizes();
  r.rho_hat = ds.rho_hat();
  return r;
}

}  // namespace

double Family::mean(double z) const noexcept {
  switch (id_) {
    case FamilyId::GaussianLinear: return z;
    case FamilyId::BernoulliLogistic:
    case FamilyId::BinomialLogistic: return logistic(z);
    case FamilyId::PoissonExponential: return std::exp(z);
  }
  return z;
}

double Family::mean_derivative(double z) const noexcept {
  switch (id_) {
    case FamilyId::GaussianLinear: return 1.0;
    case FamilyId::BernoulliLogistic:
    case FamilyId::BinomialLogistic: {
      const double p = logistic(z);
      return p * (1.0 - p);
    }
    case FamilyId::PoissonExponential: return std::exp(z);
  }
  return 1.0;
}

double Family::qll(double y, double z, double b) const noexcept {
  switch (id_) {
    case FamilyId::GaussianLinear: return -0.5 * (y - z) * (y - z);
    case FamilyId::BernoulliLogistic: return y * z - softplus(z);
    case FamilyId::BinomialLogistic: return y * z - b * softplus(z);
    case FamilyId::PoissonExponential: return y * z - std::exp(z);
  }
  return 0.0;
}

void Family::check_support(const Eigen::VectorXd& y, const Eigen::VectorXd* trials) const {
  const std::string name(to_string(id_));
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double v = y(i);
    bool ok = true;
    switch (id_) {
      case FamilyId::GaussianLinear: break;
      case FamilyId::BernoulliLogistic: ok = v >= 0.0 && v <= 1.0; break;
      case FamilyId::BinomialLogistic:
        if (trials == nullptr) {
          throw Error(ErrorCode::MissingColumn, "the binomial family needs trial counts");
        }
        ok = v >= 0.0 && v <= (*trials)(i);
        break;
      case FamilyId::PoissonExponential: ok = v >= 0.0; break;
    }
    if (!ok) {
      throw Error(ErrorCode::TrialsViolation, "outcome " + std::to_string(v) + " in row " +
                                                  std::to_string(i + 1) +
                                                  " is outside the support of " + name);
    }
  }
}

QmleFit qmle_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const Family& family,
                 const Eigen::VectorXd* trials, const QmleOptions& options) {
  if (y.size() != x.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "qmle: y and X row counts differ");
  }
  family.check_support(y, trials);
  const Eigen::VectorXd b =
      family.uses_trials() ? *trials : Eigen::VectorXd::Ones(y.size()).eval();

  QmleFit fit;
  fit.coefficients = starting_values(y, x, family, b);  // also rank-checks X
  Evaluation ev = evaluate(y, x, family, b, fit.coefficients, true);
  std::optional<double> previous_qll;

  auto score_ok = [&](const Evaluation& e) {
    return sup_norm(e.score) <= options.score_tolerance * std::max(1.0, std::abs(e.qll));
  };

  for (int iter = 0;; ++iter) {
    fit.iterations = iter;
    const bool qll_ok =
        !previous_qll ||
        std::abs(ev.qll - *previous_qll) <= options.qll_tolerance * std::max(1.0, std::abs(ev.qll));
    if (score_ok(ev) && qll_ok) {
      fit.converged = true;
      break;
    }
    check_separation(family, fit.coefficients, options.separation_bound, sup_norm(ev.score));
    if (iter == options.max_iterations) break;

    const Eigen::MatrixXd hessian = kernels::weighted_gram(x, kernels::view(ev.weights));
    const Eigen::VectorXd step = hessian.ldlt().solve(ev.score);
    if (!step.allFinite()) break;

    double t = 1.0;
    Eigen::VectorXd candidate = fit.coefficients + step;
    Evaluation next = evaluate(y, x, family, b, candidate, false);
    for (int h = 0; h < options.max_halvings && !(next.qll >= ev.qll); ++h) {
      t *= 0.5;
      candidate = fit.coefficients + t * step;
      next = evaluate(y, x, family, b, candidate, false);
    }
    if (!(next.qll >= ev.qll)) {
      // No measurable ascent: the QLL is flat to rounding. Keep taking full
      // Newton steps while they shrink the score.
      Evaluation full = evaluate(y, x, family, b, fit.coefficients + step, true);
      if (full.score.allFinite() && sup_norm(full.score) < 0.5 * sup_norm(ev.score)) {
        previous_qll = ev.qll;
        fit.coefficients += step;
        ev = std::move(full);
        continue;
      }
      fit.converged = score_ok(ev);
      break;
    }
    previous_qll = ev.qll;
    fit.coefficients = candidate;
    ev = evaluate(y, x, family, b, fit.coefficients, true);
  }

  if (fit.converged) {
    // Polish: full Newton steps while they keep shrinking the score, so the
    // first-order conditions hold well below the stopping tolerance.
    for (int k = 0; k < 3; ++k) {
      const Eigen::MatrixXd hessian =
          kernels::weighted_gram(x, kernels::view(ev.weights));
      const Eigen::VectorXd candidate = fit.coefficients + hessian.ldlt().solve(ev.score);
      if (!candidate.allFinite()) break;
      Evaluation next = evaluate(y, x, family, b, candidate, true);
      if (!(sup_norm(next.score) < sup_norm(ev.score))) break;
      fit.coefficients = candidate;
      ev = std::move(next);
    }
  }

  fit.score_norm = sup_norm(ev.score);
  fit.qll = ev.qll;
  fit.weighted_hessian = kernels::weighted_gram(x, kernels::view(ev.weights));
  check_separation(family, fit.coefficients, options.separation_bound, fit.score_norm);
  if (!fit.converged) {
    throw Error(ErrorCode::NoConvergence,
                "quasi-MLE did not converge after " + std::to_string(fit.iterations) +
                    " iterations (score norm " + std::to_string(fit.score_norm) + ")");
  }
  return fit;
}

Estimate estimate_nsra(const Dataset& ds, const Family& family, NsraVcov vcov,
                       const QmleOptions& options) {
  const Eigen::Index n = ds.n();
  const Eigen::Index k = ds.covariate_count();
  const int arms = ds.arms();
  const Eigen::VectorXd b = trial_counts(ds, family);
  const std::vector<Eigen::Index> all_rows = [&] {
    std::vector<Eigen::Index> r(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = i;
    return r;
  }();
  const Eigen::MatrixXd z_all = intercept_design(ds.covariates(), all_rows);

  Estimate est;
  est.result = base_result(ds, EstimatorId::NSRA, family);
  est.result.mu_hat.resize(arms);
  est.influence.kind = InfluenceKind::QmleSRA;
  Eigen::MatrixXd h_block(n, arms);
  Eigen::MatrixXd j_block = Eigen::MatrixXd::Zero(n, arms);
  const double dn = static_cast<double>(n);

  for (int g = 0; g < arms; ++g) {
    const Eigen::Index size = ds.arm_sizes()[static_cast<std::size_t>(g)];
    if (size < k + 1) {
      throw Error(ErrorCode::ArmTooSmall,
                  arm_prefix(ds, g) + std::to_string(size) + " observations for " +
                      std::to_string(k + 1) + " parameters",
                  g);
    }
    const auto rows = ds.arm_rows(g);
    const Eigen::MatrixXd z_arm = take_rows(z_all, rows);
    const Eigen::VectorXd y_arm = take_rows(ds.outcome(), rows);
    const Eigen::VectorXd b_arm = take_rows(b, rows);
    QmleFit fit;
    try {
      fit = qmle_fit(y_arm, z_arm, family, &b_arm, options);
    } catch (const Error& e) {
      throw Error(e.code(), arm_prefix(ds, g) + e.what(), g, e.column());
    }
    est.result.coefficients.push_back(
        {"arm " + ds.arm_labels()[static_cast<std::size_t>(g)], fit.coefficients});

    const Eigen::VectorXd index = z_all * fit.coefficients;
    Eigen::VectorXd fitted(n);
    Eigen::VectorXd slope(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      fitted(i) = b(i) * family.mean(index(i));
      slope(i) = b(i) * family.mean_derivative(index(i));
    }
    const double mu = kernels::sum(kernels::view(fitted)) / dn;
    est.result.mu_hat(g) = mu;
    h_block.col(g) = fitted.array() - mu;

    // Gradient of mu_g in the arm's index coefficients, and the curvature
    // that maps each arm score into coefficient space.
    const Eigen::VectorXd m_grad = kernels::cross(z_all, slope) / dn;
    Eigen::MatrixXd curvature;
    double scale = 1.0;
    if (vcov == NsraVcov::Influence) {
      curvature = kernels::weighted_gram(z_all, kernels::view(slope)) / dn;
      scale = 1.0 / est.result.rho_hat(g);
    } else {
      curvature = fit.weighted_hessian / dn;
    }
    const Eigen::VectorXd direction = curvature.ldlt().solve(m_grad) * scale;
    const Eigen::VectorXd arm_index = z_arm * fit.coefficients;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      const double resid = y_arm(ri) - b_arm(ri) * family.mean(arm_index(ri));
      j_block(rows[r], g) = resid * z_arm.row(ri).dot(direction);
    }
  }

  est.influence.rows = h_block + j_block;
  est.influence.blocks["H"] = std::move(h_block);
  est.influence.blocks["J"] = std::move(j_block);
  est.result.vcov = vcov_from_influence(est.influence);
  return est;
}

Estimate estimate_npra(const Dataset& ds, const Family& family, const QmleOptions& options) {
  const Eigen::Index n = ds.n();
  const Eigen::Index k = ds.covariate_count();
  const int arms = ds.arms();
  if (n < arms + k + 1) {
    throw Error(ErrorCode::DegenerateSample,
                "pooled nonlinear RA needs N >= G + K + 1 (N = " + std::to_string(n) + ")");
  }
  const Eigen::VectorXd b = trial_counts(ds, family);
  Eigen::MatrixXd design(n, arms + k);
  design.leftCols(arms) = ds.indicators();
  design.rightCols(k) = ds.covariates();
  const QmleFit fit = qmle_fit(ds.outcome(), design, family, &b, options);

  Estimate est;
  est.result = base_result(ds, EstimatorId::NPRA, family);
  est.result.coefficients.push_back({"pooled", fit.coefficients});
  est.result.mu_hat.resize(arms);
  est.influence.kind = InfluenceKind::QmleNPRA;

  const Eigen::VectorXd slopes = fit.coefficients.tail(k);
  const Eigen::VectorXd x_index = ds.covariates() * slopes;
  const Eigen::VectorXd own_index = design * fit.coefficients;
  const double dn = static_cast<double>(n);

  // Score of the pooled QMLE and its bread.
  Eigen::VectorXd resid(n);
  for (Eigen::Index i = 0; i < n; ++i) resid(i) = ds.outcome()(i) - b(i) * family.mean(own_index(i));
  const Eigen::MatrixXd score = design.array().colwise() * resid.array();
  const Eigen::MatrixXd bread = fit.weighted_hessian / dn;

  // A21: derivative of the mean-recovery moments in (gamma, beta).
  Eigen::MatrixXd a21 = Eigen::MatrixXd::Zero(arms, arms + k);
  Eigen::MatrixXd h_block(n, arms);
  for (int g = 0; g < arms; ++g) {
    const double gamma = fit.coefficients(g);
    Eigen::VectorXd fitted(n);
    Eigen::VectorXd slope(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      fitted(i) = b(i) * family.mean(gamma + x_index(i));
      slope(i) = b(i) * family.mean_derivative(gamma + x_index(i));
    }
    const double mu = kernels::sum(kernels::view(fitted)) / dn;
    est.result.mu_hat(g) = mu;
    h_block.col(g) = fitted.array() - mu;
    a21(g, g) = kernels::sum(kernels::view(slope)) / dn;
    if (k > 0) a21.row(g).tail(k) = kernels::cross(ds.covariates(), slope).transpose() / dn;
  }

  const Eigen::MatrixXd projection = bread.ldlt().solve(a21.transpose());  // (G+K) x G
  Eigen::MatrixXd j_block = score * projection;

  est.influence.rows = h_block + j_block;
  est.influence.blocks["H"] = std::move(h_block);
  est.influence.blocks["J"] = std::move(j_block);
  est.result.vcov = vcov_from_influence(est.influence);
  return est;
}

}  // namespace raest
