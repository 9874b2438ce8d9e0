#include "raest/inference.hpp"

#include "raest/errors.hpp"
#include "raest/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace raest {

Contrast Contrast::linear(std::string name, Eigen::VectorXd weights) {
  Contrast c;
  c.name = std::move(name);
  c.weights = std::move(weights);
  const Eigen::VectorXd a = *c.weights;
  c.function = [a](const Eigen::VectorXd& mu) { return a.dot(mu); };
  c.gradient = [a](const Eigen::VectorXd&) { return a; };
  return c;
}

Contrast Contrast::smooth(std::string name, Function function, Gradient gradient) {
  Contrast c;
  c.name = std::move(name);
  c.function = std::move(function);
  c.gradient = std::move(gradient);
  return c;
}

std::vector<Contrast> ate_contrasts(int arms, const std::vector<std::string>& labels) {
  std::vector<Contrast> out;
  auto label = [&](int g) {
    return g < static_cast<int>(labels.size()) ? labels[static_cast<std::size_t>(g)]
                                               : std::to_string(g + 1);
  };
  for (int g = 1; g < arms; ++g) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(arms);
    a(0) = -1.0;
    a(g) = 1.0;
    out.push_back(Contrast::linear("ate(" + label(g) + " - " + label(0) + ")", a));
  }
  return out;
}

Contrast did_contrast() {
  Eigen::VectorXd a(4);
  a << 1.0, -1.0, -1.0, 1.0;
  return Contrast::linear("did", a);
}

Contrast ratio_contrast(int arms, int numerator, int denominator) {
  if (numerator < 0 || numerator >= arms || denominator < 0 || denominator >= arms) {
    throw Error(ErrorCode::DimensionMismatch, "ratio contrast arm index out of range");
  }
  auto fn = [numerator, denominator](const Eigen::VectorXd& mu) {
    return mu(numerator) / mu(denominator);
  };
  auto grad = [arms, numerator, denominator](const Eigen::VectorXd& mu) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(arms);
    const double den = mu(denominator);
    g(numerator) += 1.0 / den;
    g(denominator) += -mu(numerator) / (den * den);
    return g;
  };
  return Contrast::smooth("ratio(" + std::to_string(numerator + 1) + "/" +
                              std::to_string(denominator + 1) + ")",
                          fn, grad);
}

Eigen::MatrixXd vcov_from_influence(const Eigen::MatrixXd& rows) {
  const Eigen::Index n = rows.rows();
  if (n < 2) throw Error(ErrorCode::DegenerateSample, "influence matrix needs at least two rows");
  const Eigen::VectorXd means = kernels::column_means(rows);
  const Eigen::MatrixXd centered = rows.rowwise() - means.transpose();
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  return kernels::gram(centered) * scale;
}

Eigen::MatrixXd vcov_from_influence(const InfluenceDecomposition& influence) {
  return vcov_from_influence(influence.rows);
}

ContrastResult contrast_estimate(const EstimatorResult& result, const Contrast& contrast) {
  const Eigen::Index g = result.mu_hat.size();
  if (result.vcov.rows() != g || result.vcov.cols() != g) {
    throw Error(ErrorCode::DimensionMismatch, "vcov does not match the mean vector");
  }
  ContrastResult out;
  out.contrast = contrast;
  out.source = result.estimator_id;

  if (contrast.is_linear()) {
    const Eigen::VectorXd& a = *contrast.weights;
    if (a.size() != g) {
      throw Error(ErrorCode::DimensionMismatch,
                  "contrast '" + contrast.name + "' has " + std::to_string(a.size()) +
                      " weights for " + std::to_string(g) + " arms");
    }
    if (!a.allFinite()) throw Error(ErrorCode::GradientNonFinite, "contrast weights are not finite");
    out.tau_hat = a.dot(result.mu_hat);
    out.se = std::sqrt(std::max(0.0, a.dot(result.vcov * a)));
    return out;
  }

  if (!contrast.function) {
    throw Error(ErrorCode::UsageError, "contrast '" + contrast.name + "' has no function");
  }
  out.tau_hat = contrast.function(result.mu_hat);
  Eigen::VectorXd grad;
  if (contrast.gradient) {
    grad = contrast.gradient(result.mu_hat);
  } else {
    grad.resize(g);
    for (Eigen::Index k = 0; k < g; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(result.mu_hat(k)));
      Eigen::VectorXd up = result.mu_hat;
      Eigen::VectorXd down = result.mu_hat;
      up(k) += h;
      down(k) -= h;
      grad(k) = (contrast.function(up) - contrast.function(down)) / (2.0 * h);
    }
  }
  if (grad.size() != g) {
    throw Error(ErrorCode::DimensionMismatch, "contrast gradient has the wrong length");
  }
  if (!grad.allFinite() || !std::isfinite(out.tau_hat)) {
    throw Error(ErrorCode::GradientNonFinite,
                "contrast '" + contrast.name + "' is not finite at the estimate");
  }
  out.se = std::sqrt(std::max(0.0, grad.dot(result.vcov * grad)));
  return out;
}

PsdReport psd_compare(const Eigen::MatrixXd& va, const Eigen::MatrixXd& vb, std::string label) {
  if (va.rows() != va.cols() || vb.rows() != vb.cols() || va.rows() != vb.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "psd_compare needs square matrices of equal size");
  }
  for (const Eigen::MatrixXd* m : {&va, &vb}) {
    const double scale = std::max(m->cwiseAbs().maxCoeff(), 1e-300);
    if ((*m - m->transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
      throw Error(ErrorCode::NotSymmetric, "matrix passed to psd_compare is not symmetric");
    }
  }
  const Eigen::MatrixXd diff = va - vb;
  const Eigen::MatrixXd sym = 0.5 * (diff + diff.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  PsdReport report;
  report.matrix_label = std::move(label);
  report.min_eigenvalue = solver.eigenvalues().minCoeff();
  report.max_eigenvalue = solver.eigenvalues().maxCoeff();
  report.is_psd =
      report.min_eigenvalue >= -kPsdTolerance * std::max(1.0, report.max_eigenvalue);
  return report;
}

}  // namespace raest
