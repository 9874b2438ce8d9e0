#include "raest/app.hpp"

#include "raest/csv.hpp"
#include "raest/dataset.hpp"
#include "raest/errors.hpp"
#include "raest/estimators.hpp"
#include "raest/simlab.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace raest {
namespace {

constexpr double kZ95 = 1.96;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::optional<double> to_number(const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    const auto v = to_number(item);
    if (!v || !std::isfinite(*v)) {
      throw Error(ErrorCode::UsageError, flag + ": '" + item + "' is not a number");
    }
    out.push_back(*v);
  }
  if (out.empty()) throw Error(ErrorCode::UsageError, flag + " needs at least one value");
  return out;
}

std::string sig6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

int report_error(const Error& e, std::ostream& err) {
  err << "error: " << error_code_name(e.code()) << ": " << e.what() << "\n";
  return exit_status(e.code());
}

/// Parses with CLI11; returns an exit status when the command should stop
/// (help requested or a usage error).
std::optional<int> parse_args(CLI::App& app, const std::vector<std::string>& args,
                              std::ostream& out, std::ostream& err) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: UsageError: " << e.what() << "\n";
    return 2;
  }
  return std::nullopt;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const Error& e) {
    return report_error(e, err);
  }
}

struct EstimateOptions {
  std::string csv;
  std::string group_col = "group";
  std::string outcome_col = "y";
  std::string trials_col = "trials";
  std::string covariates;
  std::string labels;
  std::string estimator = "sm";
  std::string family;
  std::string nsra_vcov = "influence";
  std::string contrast;
  std::string weights;
  std::string bids;
  std::string ratio = "2,1";
  bool json = false;
  bool vcov = false;
};

void add_estimate_options(CLI::App& app, EstimateOptions& o, bool wtp) {
  app.add_option("--csv", o.csv, "input CSV file")->required();
  app.add_option("--group-col", o.group_col, "arm column")->capture_default_str();
  app.add_option("--outcome-col", o.outcome_col, "outcome column")->capture_default_str();
  app.add_option("--trials-col", o.trials_col, "binomial trials column")->capture_default_str();
  app.add_option("--covariates", o.covariates, "comma-separated covariate columns (default: all others)");
  app.add_option("--labels", o.labels, "comma-separated arm order (default: first appearance)");
  app.add_option("--estimator", o.estimator, "sm, pra, sra, npra or nsra")->capture_default_str();
  app.add_option("--family", o.family,
                 "gaussian-linear, bernoulli-logistic, binomial-logistic or poisson-exponential");
  app.add_option("--nsra-vcov", o.nsra_vcov, "NSRA covariance: influence or robust")
      ->capture_default_str();
  if (!wtp) {
    app.add_option("--contrast", o.contrast, "ate, did, ratio, wtp or custom");
    app.add_option("--weights", o.weights, "comma-separated weights for --contrast custom");
    app.add_option("--ratio", o.ratio, "numerator,denominator arms (1-based) for --contrast ratio")
        ->capture_default_str();
  }
  auto* bids = app.add_option("--bids", o.bids, "comma-separated increasing bid amounts");
  if (wtp) bids->required();
  app.add_flag("--json", o.json, "machine-readable output");
  app.add_flag("--vcov", o.vcov, "print the covariance matrix");
}

/// Arm order that lines the arms up with ascending bids. Numeric labels are
/// matched to bids by value; other labels must already be in bid order.
std::optional<std::vector<std::string>> bid_label_order(const RawTable& raw,
                                                        const std::vector<double>& bids,
                                                        const std::optional<std::vector<std::string>>& given) {
  std::vector<std::string> distinct;
  for (const auto& g : raw.group) {
    if (std::find(distinct.begin(), distinct.end(), g) == distinct.end()) distinct.push_back(g);
  }
  std::vector<double> values;
  for (const auto& label : distinct) {
    const auto v = to_number(label);
    if (!v) return given;
    values.push_back(*v);
  }
  std::vector<std::string> order;
  for (double bid : bids) {
    std::optional<std::size_t> hit;
    for (std::size_t j = 0; j < values.size(); ++j) {
      if (std::abs(values[j] - bid) <= 1e-9 * std::max(1.0, std::abs(bid))) hit = j;
    }
    if (!hit) {
      throw Error(ErrorCode::BidOrderViolation,
                  "bid " + sig6(bid) + " does not match any group label");
    }
    order.push_back(distinct[*hit]);
  }
  if (order.size() != distinct.size()) {
    throw Error(ErrorCode::BidOrderViolation,
                std::to_string(distinct.size()) + " arms but " + std::to_string(bids.size()) +
                    " bids");
  }
  return order;
}

struct Report {
  Estimate estimate;
  std::vector<std::string> labels;
  std::vector<ContrastResult> contrasts;
  std::optional<NsraVcov> nsra_vcov;
};

Report run_estimate(const EstimateOptions& o, const std::string& contrast) {
  const auto id = parse_estimator(o.estimator);
  if (!id) throw Error(ErrorCode::UsageError, "unknown estimator '" + o.estimator + "'");
  std::optional<FamilyId> family;
  if (!o.family.empty()) {
    family = parse_family(o.family);
    if (!family) throw Error(ErrorCode::UsageError, "unknown family '" + o.family + "'");
  }
  if ((*id == EstimatorId::NPRA || *id == EstimatorId::NSRA) && !family) {
    throw Error(ErrorCode::UsageError, std::string(to_string(*id)) + " needs --family");
  }
  NsraVcov nsra_vcov = NsraVcov::Influence;
  if (o.nsra_vcov == "robust") {
    nsra_vcov = NsraVcov::RobustSandwich;
  } else if (o.nsra_vcov != "influence") {
    throw Error(ErrorCode::UsageError, "--nsra-vcov must be influence or robust");
  }

  CsvColumns cols;
  cols.group = o.group_col;
  cols.outcome = o.outcome_col;
  cols.trials = o.trials_col;
  if (!o.covariates.empty()) cols.covariates = split(o.covariates, ',');
  const RawTable raw = read_csv_file(o.csv, cols);

  ValidateOptions vo;
  if (!o.labels.empty()) vo.label_order = split(o.labels, ',');
  std::vector<double> bids;
  if (contrast == "wtp") {
    if (o.bids.empty()) throw Error(ErrorCode::UsageError, "--contrast wtp needs --bids");
    bids = parse_numbers(o.bids, "--bids");
    validate_bids(bids);
    vo.label_order = bid_label_order(raw, bids, vo.label_order);
  }
  const Dataset ds = validate_dataset(raw, vo);

  Report report;
  report.labels = ds.arm_labels();
  report.estimate = run_estimator(ds, *id, family, nsra_vcov);
  if (*id == EstimatorId::NSRA) report.nsra_vcov = nsra_vcov;
  const EstimatorResult& res = report.estimate.result;
  const int arms = res.arms();

  std::vector<Contrast> contrasts;
  if (contrast.empty()) {
  } else if (contrast == "ate") {
    contrasts = ate_contrasts(arms, report.labels);
  } else if (contrast == "did") {
    if (arms != 4) {
      throw Error(ErrorCode::DimensionMismatch, "did needs 4 arms ordered CB, CA, TB, TA");
    }
    contrasts.push_back(did_contrast());
  } else if (contrast == "ratio") {
    const auto idx = parse_numbers(o.ratio, "--ratio");
    if (idx.size() != 2) throw Error(ErrorCode::UsageError, "--ratio needs two arm numbers");
    contrasts.push_back(ratio_contrast(arms, static_cast<int>(idx[0]) - 1,
                                       static_cast<int>(idx[1]) - 1));
  } else if (contrast == "wtp") {
    if (static_cast<int>(bids.size()) != arms) {
      throw Error(ErrorCode::BidOrderViolation, std::to_string(arms) + " arms but " +
                                                    std::to_string(bids.size()) + " bids");
    }
    contrasts.push_back(wtp_contrast(WtpSpec{bids}));
  } else if (contrast == "custom") {
    if (o.weights.empty()) throw Error(ErrorCode::UsageError, "--contrast custom needs --weights");
    const auto w = parse_numbers(o.weights, "--weights");
    contrasts.push_back(
        Contrast::linear("custom", Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()))));
  } else {
    throw Error(ErrorCode::UsageError, "unknown contrast '" + contrast + "'");
  }
  for (const auto& c : contrasts) report.contrasts.push_back(contrast_estimate(res, c));
  return report;
}

nlohmann::json to_json(const Report& r) {
  const EstimatorResult& res = r.estimate.result;
  nlohmann::json j;
  j["schema"] = 1;
  j["estimator"] = std::string(to_string(res.estimator_id));
  j["family"] = res.family ? nlohmann::json(std::string(to_string(*res.family))) : nlohmann::json();
  if (r.nsra_vcov) j["nsra_vcov"] = *r.nsra_vcov == NsraVcov::Influence ? "influence" : "robust";
  j["arms"] = r.labels;
  j["group_sizes"] = res.group_sizes;
  const Eigen::VectorXd se = res.standard_errors();
  j["mu_hat"] = std::vector<double>(res.mu_hat.data(), res.mu_hat.data() + res.mu_hat.size());
  j["se"] = std::vector<double>(se.data(), se.data() + se.size());
  nlohmann::json vcov = nlohmann::json::array();
  for (Eigen::Index a = 0; a < res.vcov.rows(); ++a) {
    std::vector<double> row(static_cast<std::size_t>(res.vcov.cols()));
    for (Eigen::Index b = 0; b < res.vcov.cols(); ++b) row[static_cast<std::size_t>(b)] = res.vcov(a, b);
    vcov.push_back(row);
  }
  j["vcov"] = vcov;
  nlohmann::json contrasts = nlohmann::json::array();
  for (const auto& c : r.contrasts) {
    contrasts.push_back({{"name", c.contrast.name},
                         {"tau_hat", c.tau_hat},
                         {"se", c.se},
                         {"normal95", {c.tau_hat - kZ95 * c.se, c.tau_hat + kZ95 * c.se}}});
  }
  j["contrasts"] = contrasts;
  return j;
}

void print_report(std::ostream& out, const Report& r, bool with_vcov) {
  const EstimatorResult& res = r.estimate.result;
  out << "estimator: " << to_string(res.estimator_id);
  if (res.family) out << " (" << to_string(*res.family) << ")";
  if (r.nsra_vcov) out << ", " << (*r.nsra_vcov == NsraVcov::Influence ? "influence" : "robust") << " covariance";
  Eigen::Index n = 0;
  for (auto s : res.group_sizes) n += s;
  out << "\nN = " << n << ", arms = " << res.arms() << "\n\n";
  out << pad("arm", 12) << pad("N_g", 8) << pad("mu_hat", 14) << pad("se", 14) << "normal 95%\n";
  const Eigen::VectorXd se = res.standard_errors();
  for (int g = 0; g < res.arms(); ++g) {
    const double m = res.mu_hat(g);
    out << pad(r.labels[static_cast<std::size_t>(g)], 12)
        << pad(std::to_string(res.group_sizes[static_cast<std::size_t>(g)]), 8) << pad(sig6(m), 14)
        << pad(sig6(se(g)), 14) << "[" << sig6(m - kZ95 * se(g)) << ", " << sig6(m + kZ95 * se(g))
        << "]\n";
  }
  if (with_vcov) {
    out << "\nvcov:\n";
    for (Eigen::Index a = 0; a < res.vcov.rows(); ++a) {
      for (Eigen::Index b = 0; b < res.vcov.cols(); ++b) out << pad(sig6(res.vcov(a, b)), 14);
      out << "\n";
    }
  }
  if (!r.contrasts.empty()) {
    out << "\n" << pad("contrast", 24) << pad("tau_hat", 14) << pad("se", 14) << "normal 95%\n";
    for (const auto& c : r.contrasts) {
      out << pad(c.contrast.name, 24) << pad(sig6(c.tau_hat), 14) << pad(sig6(c.se), 14) << "["
          << sig6(c.tau_hat - kZ95 * c.se) << ", " << sig6(c.tau_hat + kZ95 * c.se) << "]\n";
    }
  }
}

int estimate_like(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                  bool wtp) {
  CLI::App app(wtp ? "Lower bound on mean willingness to pay" : "Estimate potential-outcome means",
               wtp ? "raest wtp" : "raest estimate");
  EstimateOptions o;
  add_estimate_options(app, o, wtp);
  if (auto status = parse_args(app, args, out, err)) return *status;
  return guarded(
      [&] {
        const Report r = run_estimate(o, wtp ? "wtp" : o.contrast);
        if (o.json) {
          out << to_json(r).dump(2) << "\n";
        } else {
          print_report(out, r, o.vcov);
        }
        return 0;
      },
      err);
}

}  // namespace

void validate_bids(const std::vector<double>& bids) {
  if (bids.empty()) throw Error(ErrorCode::BidOrderViolation, "no bids given");
  for (std::size_t g = 0; g < bids.size(); ++g) {
    if (!(bids[g] > 0.0) || (g > 0 && !(bids[g] > bids[g - 1]))) {
      throw Error(ErrorCode::BidOrderViolation,
                  "bids must be positive and strictly increasing (position " +
                      std::to_string(g + 1) + ")");
    }
  }
}

Contrast wtp_contrast(const WtpSpec& spec) {
  validate_bids(spec.bids);
  Eigen::VectorXd a(static_cast<Eigen::Index>(spec.bids.size()));
  double previous = 0.0;
  for (std::size_t g = 0; g < spec.bids.size(); ++g) {
    a(static_cast<Eigen::Index>(g)) = spec.bids[g] - previous;
    previous = spec.bids[g];
  }
  return Contrast::linear("wtp", a);
}

ContrastResult wtp_lower_bound(const EstimatorResult& result, const WtpSpec& spec) {
  if (static_cast<std::size_t>(result.arms()) != spec.bids.size()) {
    throw Error(ErrorCode::BidOrderViolation, std::to_string(result.arms()) + " arms but " +
                                                  std::to_string(spec.bids.size()) + " bids");
  }
  return contrast_estimate(result, wtp_contrast(spec));
}

int cmd_estimate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return estimate_like(args, out, err, false);
}

int cmd_wtp(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return estimate_like(args, out, err, true);
}

int cmd_simulate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Monte Carlo study on the built-in populations", "raest simulate");
  std::string model;
  std::string regime;
  std::string n_list;
  std::string estimators = "sm,pra,sra";
  std::string family;
  std::string latent = "default";
  std::string out_csv;
  int reps = 1000;
  std::uint64_t seed = 1;
  Eigen::Index population_size = 1000000;
  unsigned threads = 0;
  app.add_option("--model", model, "pop1, pop2 or pop3")->required();
  app.add_option("--regime", regime, "low or high")->required();
  app.add_option("--n", n_list, "comma-separated sample sizes")->required();
  app.add_option("--reps", reps, "replications per sample size")->capture_default_str();
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--estimators", estimators, "comma-separated estimators")->capture_default_str();
  app.add_option("--family", family, "family for npra / nsra (default: matched to the model)");
  app.add_option("--latent", latent, "latent error recipe: default or shared")
      ->capture_default_str();
  app.add_option("--population-size", population_size, "population rows")->capture_default_str();
  app.add_option("--threads", threads, "worker threads (0: hardware concurrency)");
  app.add_option("--out-csv", out_csv, "write the Bias/Sd table as CSV");
  if (auto status = parse_args(app, args, out, err)) return *status;

  return guarded(
      [&] {
        const auto pid = parse_population(model);
        if (!pid) throw Error(ErrorCode::UnknownModel, "unknown model '" + model + "'");
        const auto reg = parse_regime(regime);
        if (!reg) throw Error(ErrorCode::UsageError, "regime must be low or high");
        PopulationModel pm = population_model(*pid, *reg);
        if (latent == "shared") {
          pm.latent = LatentRecipe::Shared;
        } else if (latent != "default") {
          throw Error(ErrorCode::UsageError, "--latent must be default or shared");
        }
        std::optional<FamilyId> fam = natural_family(*pid);
        if (!family.empty()) {
          fam = parse_family(family);
          if (!fam) throw Error(ErrorCode::UsageError, "unknown family '" + family + "'");
        }
        ReplicationConfig config;
        config.reps = reps;
        config.seed = seed;
        config.threads = threads;
        for (const auto& name : split(estimators, ',')) {
          const auto id = parse_estimator(name);
          if (!id) throw Error(ErrorCode::UsageError, "unknown estimator '" + name + "'");
          EstimatorSpec spec{*id, std::nullopt};
          if (*id == EstimatorId::NPRA || *id == EstimatorId::NSRA) spec.family = fam;
          config.estimators.push_back(spec);
        }
        std::vector<Eigen::Index> sizes;
        for (double v : parse_numbers(n_list, "--n")) {
          if (v < 2 || v != std::floor(v)) throw Error(ErrorCode::UsageError, "--n needs integers >= 2");
          sizes.push_back(static_cast<Eigen::Index>(v));
        }

        const Population pop = generate_population(pm, population_size, seed);
        SimulationSummary all;
        all.population = pop.id;
        all.regime = pop.regime;
        all.true_means = pop.true_means;
        for (Eigen::Index n : sizes) {
          config.n = n;
          SimulationSummary s = run_replications(pop, config);
          all.rows.insert(all.rows.end(), s.rows.begin(), s.rows.end());
        }
        print_summary(out, all);
        const Eigen::Vector3d r2 = population_r_squared(pop);
        out << "\npopulation R^2 per arm (informational): " << sig6(r2(0)) << ", " << sig6(r2(1))
            << ", " << sig6(r2(2)) << "\n";
        if (!out_csv.empty()) {
          std::ofstream file(out_csv);
          if (!file) throw Error(ErrorCode::UsageError, "cannot write '" + out_csv + "'");
          write_summary_csv(file, all);
        }
        return 0;
      },
      err);
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  static const char* usage =
      "usage: raest <command> [options]\n"
      "commands:\n"
      "  estimate   potential-outcome means, standard errors and contrasts from a CSV\n"
      "  simulate   Monte Carlo Bias/Sd tables on the built-in populations\n"
      "  wtp        lower bound on mean willingness to pay from referendum data\n"
      "run 'raest <command> --help' for the options of a command\n";
  if (args.empty()) {
    err << usage;
    return 2;
  }
  const std::string& cmd = args.front();
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  if (cmd == "estimate") return cmd_estimate(rest, out, err);
  if (cmd == "simulate") return cmd_simulate(rest, out, err);
  if (cmd == "wtp") return cmd_wtp(rest, out, err);
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    out << usage;
    return 0;
  }
  err << "error: UsageError: unknown command '" << cmd << "'\n" << usage;
  return 2;
}

}  // namespace raest
