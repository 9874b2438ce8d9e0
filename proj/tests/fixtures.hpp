#pragma once

// Shared synthetic data for the unit and acceptance tests.

#include "raest/dataset.hpp"
#include "raest/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fixtures {

inline const std::vector<double> kBids{5, 25, 65, 120, 220};
inline const std::vector<int> kGroupSizes{219, 216, 241, 181, 228};
inline const std::vector<int> kYesCounts{151, 123, 117, 73, 66};

/// Referendum-shaped table: one row per interview, group = bid, y = vote.
/// Covariates are drawn first; within each bid the yes votes go to the
/// units with the highest latent score, so yes-counts are exact and votes
/// are moderately predictable from (income, female).
inline raest::RawTable wtp_table(std::uint64_t seed = 20240611) {
  raest::SplitMix64 engine(seed);
  std::normal_distribution<double> normal;
  raest::RawTable t;
  t.covariate_names = {"income", "female"};
  t.covariates.assign(2, {});
  for (std::size_t g = 0; g < kBids.size(); ++g) {
    const int size = kGroupSizes[g];
    std::vector<double> income(static_cast<std::size_t>(size));
    std::vector<double> female(static_cast<std::size_t>(size));
    std::vector<double> score(static_cast<std::size_t>(size));
    for (int i = 0; i < size; ++i) {
      const auto k = static_cast<std::size_t>(i);
      income[k] = normal(engine);
      female[k] = raest::uniform01(engine) < 0.5 ? 1.0 : 0.0;
      score[k] = income[k] + 0.5 * female[k] + 1.6 * normal(engine);
    }
    std::vector<int> order(static_cast<std::size_t>(size));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    });
    std::vector<double> vote(static_cast<std::size_t>(size), 0.0);
    for (int r = 0; r < kYesCounts[g]; ++r) vote[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = 1.0;
    char label[32];
    std::snprintf(label, sizeof label, "%g", kBids[g]);
    for (int i = 0; i < size; ++i) {
      const auto k = static_cast<std::size_t>(i);
      t.group.emplace_back(label);
      t.outcome.push_back(vote[k]);
      t.covariates[0].push_back(income[k]);
      t.covariates[1].push_back(female[k]);
    }
  }
  return t;
}

inline std::string to_csv(const raest::RawTable& t) {
  std::ostringstream out;
  out.precision(17);
  out << "group,y";
  if (t.trials) out << ",trials";
  for (const auto& name : t.covariate_names) out << "," << name;
  out << "\n";
  for (std::size_t i = 0; i < t.group.size(); ++i) {
    out << t.group[i] << "," << t.outcome[i];
    if (t.trials) out << "," << (*t.trials)[i];
    for (const auto& col : t.covariates) out << "," << col[i];
    out << "\n";
  }
  return out.str();
}

inline std::string write_temp(const std::string& name, const std::string& contents) {
  const std::string path = "/tmp/raest_test_" + name;
  std::ofstream(path) << contents;
  return path;
}

/// Random linear DGP with arm-specific slopes: y = a_g + X b_g + e_g, with
/// heteroskedastic, skewed errors so the estimators' covariances differ.
struct LinearDgp {
  std::vector<double> rho;
  Eigen::MatrixXd slopes;  // G x K
  Eigen::VectorXd intercepts;
};

inline raest::Dataset draw_linear(const LinearDgp& dgp, Eigen::Index n, std::uint64_t seed,
                                  bool common_slopes = false) {
  raest::SplitMix64 engine(seed);
  std::normal_distribution<double> normal;
  const auto arms = static_cast<int>(dgp.rho.size());
  const Eigen::Index k = dgp.slopes.cols();
  std::vector<int> group(static_cast<std::size_t>(n));
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      x(i, j) = j % 2 == 0 ? normal(engine) + 0.5 * j : std::exp(0.5 * normal(engine));
    }
    double u = raest::uniform01(engine);
    int g = 0;
    double acc = 0.0;
    for (; g < arms - 1; ++g) {
      acc += dgp.rho[static_cast<std::size_t>(g)];
      if (u < acc) break;
    }
    group[static_cast<std::size_t>(i)] = g;
    const Eigen::VectorXd b = common_slopes ? dgp.slopes.row(0).transpose().eval()
                                            : dgp.slopes.row(g).transpose().eval();
    const double e = normal(engine) * (1.0 + 0.3 * std::abs(x(i, 0)));
    y(i) = dgp.intercepts(g) + x.row(i).dot(b) + e;
  }
  std::vector<std::string> labels;
  for (int g = 0; g < arms; ++g) labels.push_back(std::to_string(g + 1));
  return raest::Dataset(std::move(group), std::move(y), std::nullopt, std::move(x), {},
                        std::move(labels));
}

}  // namespace fixtures
