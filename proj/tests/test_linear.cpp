#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "raest/errors.hpp"
#include "raest/inference.hpp"
#include "raest/linear.hpp"

#include <cmath>

using namespace raest;

namespace {

Dataset simple(std::vector<int> group, std::vector<double> y, Eigen::MatrixXd x = {}) {
  const auto n = static_cast<Eigen::Index>(y.size());
  int arms = 0;
  for (int g : group) arms = std::max(arms, g + 1);
  std::vector<std::string> labels;
  for (int g = 0; g < arms; ++g) labels.push_back(std::to_string(g + 1));
  if (x.rows() != n) x.resize(n, 0);
  return Dataset(std::move(group), Eigen::Map<Eigen::VectorXd>(y.data(), n), std::nullopt, x, {},
                 labels);
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

fixtures::LinearDgp three_arm_dgp() {
  fixtures::LinearDgp dgp;
  dgp.rho = {0.2, 0.3, 0.5};
  dgp.slopes.resize(3, 2);
  dgp.slopes << 1.0, -0.5, 2.0, 0.5, -1.0, 1.5;
  dgp.intercepts = Eigen::Vector3d(0.0, 1.0, -0.5);
  return dgp;
}

}  // namespace

TEST_CASE("ols closed forms") {
  const Eigen::VectorXd y = Eigen::Vector3d(1, 2, 3);
  const OlsFit fit = ols(y, Eigen::MatrixXd::Ones(3, 1));
  CHECK(fit.coefficients(0) == doctest::Approx(2.0));
  CHECK(fit.residuals(0) == doctest::Approx(-1.0));
  CHECK(std::abs(fit.residuals(1)) < 1e-14);
  CHECK(fit.residuals(2) == doctest::Approx(1.0));
  CHECK(fit.design_rank == 1);

  Eigen::MatrixXd x(4, 2);
  x << 1, 0, 1, 1, 1, 2, 1, 5;
  const Eigen::VectorXd exact = x * Eigen::Vector2d(0.5, -2.0);
  CHECK(max_abs(ols(exact, x).residuals) < 1e-10);
}

TEST_CASE("ols matches a normal-equations oracle") {
  SplitMix64 engine(5);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(50, 3);
  Eigen::VectorXd y(50);
  for (Eigen::Index i = 0; i < 50; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = normal(engine);
    x(i, 2) = normal(engine) + 0.3 * x(i, 1);
    y(i) = 1.0 + 2.0 * x(i, 1) - x(i, 2) + normal(engine);
  }
  const OlsFit fit = ols(y, x);
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::VectorXd oracle = xtx.llt().solve(x.transpose() * y);
  CHECK(max_abs(fit.coefficients - oracle) < 1e-8);
  CHECK(max_abs(fit.xtx_inverse - xtx.inverse()) < 1e-8);
  // Residuals orthogonal to every design column.
  const Eigen::VectorXd ortho = x.transpose() * fit.residuals;
  CHECK(max_abs(ortho) < 1e-8 * (x.norm() * y.norm()));
}

TEST_CASE("ols reports the dependent column") {
  Eigen::MatrixXd x(6, 3);
  for (int i = 0; i < 6; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = i;
    x(i, 2) = 2.0 * i + 1.0;
  }
  try {
    ols(Eigen::VectorXd::LinSpaced(6, 0, 1), x);
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
    REQUIRE(e.column());
    CHECK(*e.column() >= 0);
    CHECK(*e.column() <= 2);
  }
}

TEST_CASE("subsample means") {
  const Estimate est = estimate_sm(simple({0, 0, 1}, {2, 4, 6}));
  CHECK(est.result.mu_hat(0) == doctest::Approx(3.0));
  CHECK(est.result.mu_hat(1) == doctest::Approx(6.0));
  CHECK(est.result.estimator_id == EstimatorId::SM);

  const Estimate flat = estimate_sm(simple({0, 0, 1, 1}, {2, 2, 5, 5}));
  CHECK(max_abs(flat.result.vcov) == 0.0);

  const Estimate small = estimate_sm(simple({0, 0, 1, 1}, {0, 2, 1, 3}));
  CHECK(small.result.vcov(0, 0) == doctest::Approx(0.5));
  CHECK(small.result.vcov(1, 1) == doctest::Approx(0.5));
  CHECK(std::abs(small.result.vcov(0, 1)) < 1e-15);
}

TEST_CASE("subsample means on the referendum fixture") {
  const Dataset ds = validate_dataset(fixtures::wtp_table());
  const Estimate est = estimate_sm(ds);
  // Reference shares; 151/219 = 0.68950 sits one unit above the first.
  const double expected[] = {0.6894, 0.5694, 0.4855, 0.4033, 0.2895};
  for (int g = 0; g < 5; ++g) {
    const auto k = static_cast<std::size_t>(g);
    CHECK(est.result.mu_hat(g) ==
          doctest::Approx(static_cast<double>(fixtures::kYesCounts[k]) / fixtures::kGroupSizes[k])
              .epsilon(1e-12));
    CHECK(std::abs(est.result.mu_hat(g) - expected[g]) <= 1e-4);
    // Diagonal equals the within-arm variance (divisor N_g) over N_g.
    const double p = est.result.mu_hat(g);
    const double ng = static_cast<double>(ds.arm_sizes()[static_cast<std::size_t>(g)]);
    CHECK(est.result.vcov(g, g) == doctest::Approx(p * (1 - p) / ng).epsilon(1e-12));
  }
}

TEST_CASE("SM equals OLS on the arm indicators") {
  const Dataset ds = fixtures::draw_linear(three_arm_dgp(), 500, 17);
  const Estimate est = estimate_sm(ds);
  const OlsFit fit = ols(ds.outcome(), ds.indicators());
  CHECK(max_abs(est.result.mu_hat - fit.coefficients) < 1e-10);
}

TEST_CASE("SRA with flat covariates reproduces SM") {
  Eigen::MatrixXd x(8, 1);
  x << 0.1, 0.7, -1.2, 2.0, 0.3, -0.4, 1.1, 0.9;
  const Dataset ds = simple({0, 0, 0, 0, 1, 1, 1, 1}, {3, 3, 3, 3, -1, -1, -1, -1}, x);
  const Estimate sra = estimate_sra(ds);
  const Estimate sm = estimate_sm(ds);
  CHECK(max_abs(sra.result.mu_hat - sm.result.mu_hat) < 1e-10);
  CHECK(max_abs(sra.result.vcov - sm.result.vcov) < 1e-10);
}

TEST_CASE("SRA with a single arm gives the overall mean") {
  fixtures::LinearDgp dgp = three_arm_dgp();
  dgp.rho = {1.0};
  dgp.slopes = dgp.slopes.topRows(1).eval();
  dgp.intercepts = dgp.intercepts.head(1).eval();
  const Dataset ds = fixtures::draw_linear(dgp, 200, 3);
  const Estimate est = estimate_sra(ds);
  CHECK(std::abs(est.result.mu_hat(0) - ds.outcome().mean()) < 1e-10);
}

TEST_CASE("SRA imputation identity and influence additivity") {
  const Dataset ds = fixtures::draw_linear(three_arm_dgp(), 800, 23);
  const Estimate sra = estimate_sra(ds);
  for (int g = 0; g < 3; ++g) {
    const Eigen::VectorXd& c = sra.result.coefficients[static_cast<std::size_t>(g)].values;
    const Eigen::VectorXd fitted = (ds.covariates() * c.tail(2)).array() + c(0);
    CHECK(std::abs(sra.result.mu_hat(g) - fitted.mean()) < 1e-10);
  }
  REQUIRE(sra.influence.blocks.count("K") == 1);
  REQUIRE(sra.influence.blocks.count("Q") == 1);
  CHECK(max_abs(*sra.influence.block_sum() - sra.influence.rows) == 0.0);

  const Estimate sm = estimate_sm(ds);
  REQUIRE(sm.influence.blocks.size() == 2);
  CHECK(max_abs(*sm.influence.block_sum() - sm.influence.rows) < 1e-12);

  const Estimate pra = estimate_pra(ds);
  REQUIRE(pra.influence.blocks.size() == 3);
  CHECK(max_abs(*pra.influence.block_sum() - pra.influence.rows) < 1e-12);
}

TEST_CASE("SRA arm-size and rank errors name the arm") {
  Eigen::MatrixXd x(7, 1);
  x << 0.1, 0.7, -1.2, 2.0, 0.3, -0.4, 1.1;
  try {
    estimate_sra(simple({0, 0, 0, 0, 1, 1, 0}, {1, 2, 3, 4, 5, 6, 7}, x));
    FAIL("expected ArmTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ArmTooSmall);
    CHECK(e.arm() == 1);
  }
  Eigen::MatrixXd constant_in_arm(8, 1);
  constant_in_arm << 0.1, 0.7, -1.2, 2.0, 5, 5, 5, 5;
  try {
    estimate_sra(simple({0, 0, 0, 0, 1, 1, 1, 1}, {1, 2, 3, 4, 5, 6, 7, 9}, constant_in_arm));
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankDeficient);
    CHECK(e.arm() == 1);
  }
}

TEST_CASE("PRA without covariates is SM") {
  const Dataset ds = simple({0, 1, 0, 2, 1, 2, 0}, {1.5, 2, 3, 7, 0.5, 6, -1});
  const Estimate pra = estimate_pra(ds);
  const Estimate sm = estimate_sm(ds);
  CHECK(max_abs(pra.result.mu_hat - sm.result.mu_hat) < 1e-12);
  CHECK(max_abs(pra.result.vcov - sm.result.vcov) < 1e-15);
}

TEST_CASE("PRA and SRA agree on average when slopes are common") {
  const fixtures::LinearDgp dgp = three_arm_dgp();
  Eigen::Vector3d pra_sum = Eigen::Vector3d::Zero();
  Eigen::Vector3d sra_sum = Eigen::Vector3d::Zero();
  for (int rep = 0; rep < 1000; ++rep) {
    const Dataset ds = fixtures::draw_linear(dgp, 1000, 1000 + static_cast<std::uint64_t>(rep), true);
    pra_sum += estimate_pra(ds).result.vcov.diagonal();
    sra_sum += estimate_sra(ds).result.vcov.diagonal();
  }
  for (int g = 0; g < 3; ++g) CHECK(pra_sum(g) / sra_sum(g) == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("influence blocks are orthogonal at scale") {
  const Eigen::Index n = 100000;
  const Dataset ds = fixtures::draw_linear(three_arm_dgp(), n, 31);
  const Estimate sm = estimate_sm(ds);
  const Estimate sra = estimate_sra(ds);
  const Estimate pra = estimate_pra(ds);
  auto check_pair = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* name) {
    CAPTURE(name);
    for (Eigen::Index g = 0; g < a.cols(); ++g) {
      for (Eigen::Index h = 0; h < b.cols(); ++h) {
        const Eigen::ArrayXd prod = a.col(g).array() * b.col(h).array();
        const double mean = prod.mean();
        const double sd = std::sqrt((prod - mean).square().sum() / static_cast<double>(n - 1));
        CHECK(std::abs(mean) <= 4.0 / std::sqrt(static_cast<double>(n)) * sd + 1e-12);
      }
    }
  };
  check_pair(sm.influence.blocks.at("L"), sm.influence.blocks.at("Q"), "L.Q");
  check_pair(sra.influence.blocks.at("K"), sra.influence.blocks.at("Q"), "K.Q");
  check_pair(pra.influence.blocks.at("F"), pra.influence.blocks.at("K"), "F.K");
  check_pair(pra.influence.blocks.at("F"), pra.influence.blocks.at("Q"), "F.Q");
}

TEST_CASE("separate RA dominates SM and pooled RA") {
  const Dataset ds = fixtures::draw_linear(three_arm_dgp(), 100000, 41);
  const Eigen::MatrixXd v_sra = estimate_sra(ds).result.vcov;
  CHECK(psd_compare(estimate_sm(ds).result.vcov, v_sra, "SM - SRA").is_psd);
  CHECK(psd_compare(estimate_pra(ds).result.vcov, v_sra, "PRA - SRA").is_psd);
}

TEST_CASE("two balanced arms: pooled and separate RA coincide for the difference") {
  fixtures::LinearDgp dgp;
  dgp.rho = {0.5, 0.5};
  dgp.slopes.resize(2, 2);
  dgp.slopes << 2.0, -1.0, -1.0, 1.5;
  dgp.intercepts = Eigen::Vector2d(0.0, 1.0);
  const Eigen::Index n = 100000;
  const Dataset ds = fixtures::draw_linear(dgp, n, 53);
  const Eigen::Vector2d a(-1.0, 1.0);
  const double v_sra = a.dot(estimate_sra(ds).result.vcov * a);
  const double v_pra = a.dot(estimate_pra(ds).result.vcov * a);
  CHECK(std::abs(v_pra - v_sra) <= 5.0 / std::sqrt(static_cast<double>(n)) * v_sra);
}
