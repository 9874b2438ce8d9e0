#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "raest/app.hpp"
#include "raest/csv.hpp"
#include "raest/errors.hpp"
#include "raest/estimators.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace raest;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string bid_list() {
  std::string s;
  for (double b : fixtures::kBids) s += (s.empty() ? "" : ",") + std::to_string(static_cast<int>(b));
  return s;
}

const std::string kToy = "group,y,x\na,2,0.5\na,4,1.5\nb,5,0.1\nb,7,0.3\n";

}  // namespace

TEST_CASE("estimate prints subsample means") {
  const std::string path = fixtures::write_temp("toy.csv", kToy);
  const Run r = cli({"estimate", "--csv", path, "--json"});
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["mu_hat"][0].get<double>() == 3.0);
  CHECK(j["mu_hat"][1].get<double>() == 6.0);
  CHECK(j["family"].is_null());
  CHECK(j["arms"] == nlohmann::json({"a", "b"}));

  const Run human = cli({"estimate", "--csv", path, "--contrast", "ate"});
  CHECK(human.status == 0);
  CHECK(human.out.find("ate(b - a)") != std::string::npos);
}

TEST_CASE("usage and data errors map to exit statuses") {
  const std::string path = fixtures::write_temp("toy.csv", kToy);
  Run r = cli({"estimate", "--csv", path, "--estimator", "nsra", "--family", "cauchy"});
  CHECK(r.status == 2);
  CHECK(r.err.rfind("error: UsageError:", 0) == 0);

  r = cli({"estimate", "--csv", path, "--estimator", "nsra"});
  CHECK(r.status == 2);

  r = cli({"estimate", "--csv", path, "--labels", "a,b,c"});
  CHECK(r.status == 3);
  CHECK(r.err.find("EmptyArm") != std::string::npos);

  const std::string bad = fixtures::write_temp("bad.csv", "group,y\na,1\nb,oops\n");
  r = cli({"estimate", "--csv", bad});
  CHECK(r.status == 3);

  r = cli({"frobnicate"});
  CHECK(r.status == 2);
  CHECK(cli({}).status == 2);
}

TEST_CASE("JSON output is self-consistent") {
  const std::string path = fixtures::write_temp("wtp.csv", fixtures::to_csv(fixtures::wtp_table()));
  const Run r = cli({"estimate", "--csv", path, "--estimator", "sra", "--json"});
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema"] == 1);
  CHECK(j["estimator"] == "SRA");
  const auto& se = j["se"];
  const auto& v = j["vcov"];
  REQUIRE(se.size() == 5);
  for (std::size_t g = 0; g < 5; ++g) {
    CHECK(std::abs(se[g].get<double>() - std::sqrt(v[g][g].get<double>())) <= 1e-9);
  }
  CHECK(j["group_sizes"][3] == 181);
}

TEST_CASE("ABERS through the estimate command") {
  const std::string path = fixtures::write_temp("wtp.csv", fixtures::to_csv(fixtures::wtp_table()));
  const Run r = cli({"estimate", "--csv", path, "--estimator", "sm", "--contrast", "wtp", "--bids",
                     bid_list(), "--json"});
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);
  double hand = 0.0, prev = 0.0;
  for (std::size_t g = 0; g < 5; ++g) {
    hand += (fixtures::kBids[g] - prev) * fixtures::kYesCounts[g] / fixtures::kGroupSizes[g];
    prev = fixtures::kBids[g];
  }
  CHECK(std::abs(j["contrasts"][0]["tau_hat"].get<double>() - hand) <= 1e-12);
  CHECK(j["contrasts"][0]["name"] == "wtp");
}

TEST_CASE("wtp command matches a manual library composition") {
  const RawTable raw = fixtures::wtp_table();
  const std::string path = fixtures::write_temp("wtp.csv", fixtures::to_csv(raw));
  const Run r = cli({"wtp", "--csv", path, "--estimator", "nsra", "--family", "bernoulli-logistic",
                     "--bids", bid_list(), "--json"});
  REQUIRE(r.status == 0);
  const auto j = nlohmann::json::parse(r.out);

  ValidateOptions vo;
  vo.label_order = std::vector<std::string>{"5", "25", "65", "120", "220"};
  const Dataset ds = validate_dataset(raw, vo);
  const Estimate est = run_estimator(ds, EstimatorId::NSRA, FamilyId::BernoulliLogistic);
  const ContrastResult manual = wtp_lower_bound(est.result, WtpSpec{fixtures::kBids});
  CHECK(j["contrasts"][0]["tau_hat"].get<double>() == doctest::Approx(manual.tau_hat).epsilon(1e-12));
  CHECK(j["contrasts"][0]["se"].get<double>() == doctest::Approx(manual.se).epsilon(1e-12));
  CHECK(j["family"] == "bernoulli-logistic");
  CHECK(j["nsra_vcov"] == "influence");
}

TEST_CASE("bid validation") {
  CHECK_NOTHROW(validate_bids({1, 2, 3}));
  for (const std::vector<double>& bad : {std::vector<double>{5, 3}, std::vector<double>{1, 1},
                                         std::vector<double>{0, 2}, std::vector<double>{}}) {
    try {
      validate_bids(bad);
      FAIL("expected BidOrderViolation");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BidOrderViolation);
    }
  }
  const std::string path = fixtures::write_temp("wtp.csv", fixtures::to_csv(fixtures::wtp_table()));
  Run r = cli({"wtp", "--csv", path, "--bids", "25,5,65,120,220"});
  CHECK(r.status == 2);
  CHECK(r.err.find("BidOrderViolation") != std::string::npos);
  r = cli({"wtp", "--csv", path, "--bids", "5,25,65,120,250"});
  CHECK(r.status == 2);
  r = cli({"wtp", "--csv", path});
  CHECK(r.status == 2);
}

TEST_CASE("WTP contrast weights") {
  const Contrast c = wtp_contrast(WtpSpec{{5, 25, 65}});
  REQUIRE(c.weights);
  CHECK(*c.weights == Eigen::Vector3d(5, 20, 40));
}

TEST_CASE("simulate output") {
  const std::vector<std::string> base{"simulate", "--model", "pop1", "--regime", "low", "--n", "200",
                                      "--population-size", "20000"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  const Run one = cli(with({"--reps", "1"}));
  REQUIRE(one.status == 0);
  CHECK(one.out.find("NA") != std::string::npos);
  CHECK(one.out.find("R^2") != std::string::npos);

  const std::string a = "/tmp/raest_test_sim_a.csv";
  const std::string b = "/tmp/raest_test_sim_b.csv";
  REQUIRE(cli(with({"--reps", "30", "--seed", "7", "--out-csv", a, "--threads", "2"})).status == 0);
  REQUIRE(cli(with({"--reps", "30", "--seed", "7", "--out-csv", b, "--threads", "1"})).status == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).rfind("model,regime,n,estimator,arm,true_mean,bias,sd,median_se,reps,failures", 0) == 0);

  CHECK(cli({"simulate", "--model", "pop7", "--regime", "low", "--n", "100"}).status == 2);
}
