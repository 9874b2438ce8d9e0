#include "raest/simlab.hpp"

#include "raest/dataset.hpp"
#include "raest/errors.hpp"
#include "raest/estimators.hpp"
#include "raest/linear.hpp"
#include "raest/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

namespace raest {
namespace {

constexpr Eigen::Index kChunkRows = 65536;
constexpr std::uint64_t kStreamCovariates = 1;
constexpr std::uint64_t kStreamCounts = 2;  // + arm index
constexpr std::uint64_t kStreamReplication = 16;
constexpr std::uint64_t kStreamAssignment = 17;

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fixed4(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

struct RepRecord {
  // Per estimator: mu_hat and se, or the failure message.
  std::vector<Eigen::Vector3d> mu;
  std::vector<Eigen::Vector3d> se;
  std::vector<std::string> failure;
  std::vector<bool> ok;
};

}  // namespace

std::string_view to_string(PopulationId id) noexcept {
  switch (id) {
    case PopulationId::Pop1Linear: return "pop1";
    case PopulationId::Pop2Fractional: return "pop2";
    case PopulationId::Pop3Poisson: return "pop3";
  }
  return "?";
}

std::string_view to_string(Regime regime) noexcept {
  return regime == Regime::Low ? "low" : "high";
}

std::optional<PopulationId> parse_population(std::string_view text) {
  if (text == "pop1" || text == "pop1-linear") return PopulationId::Pop1Linear;
  if (text == "pop2" || text == "pop2-fractional") return PopulationId::Pop2Fractional;
  if (text == "pop3" || text == "pop3-poisson") return PopulationId::Pop3Poisson;
  return std::nullopt;
}

std::optional<Regime> parse_regime(std::string_view text) {
  if (text == "low") return Regime::Low;
  if (text == "high") return Regime::High;
  return std::nullopt;
}

std::vector<Parameterization> builtin_parameterizations() {
  using P = PopulationId;
  return {
      {P::Pop1Linear, Regime::Low,
       {vec({0, 0.2, 0.1, 0.1}), vec({1, 1.4, -1, -1}), vec({2, -0.01, 0.1, 0.5})}},
      {P::Pop1Linear, Regime::High,
       {vec({0, 1, 0.2, -0.3}), vec({1, 2.5, 0, -0.3}), vec({2, 1.1, -1, 0.1})}},
      {P::Pop2Fractional, Regime::Low,
       {vec({-3, 0.6, 0.1, 0, 0.1}), vec({0, 1.9, 0, -0.6, 0.1}),
        vec({-2.5, 0.9, 0.1, -0.05, -0.5})}},
      {P::Pop2Fractional, Regime::High,
       {vec({-1, 1.8, -0.5, 0, 0.4}), vec({0, 2, 0, -0.05, 0.04}),
        vec({0.3, 1, 0.6, -0.06, -0.2})}},
      {P::Pop3Poisson, Regime::Low,
       {vec({-1, 0.5, 1, 0.3}), vec({0, 0.7, 0, 0.1}), vec({0, 0.6, 1, 0.1})}},
      {P::Pop3Poisson, Regime::High,
       {vec({1, 0.05, 1.4, 0.3}), vec({0.9, 0.4, 0, 0.01}), vec({0, 0.4, 1.4, -0.1})}},
  };
}

PopulationModel population_model(PopulationId id, Regime regime) {
  for (const auto& p : builtin_parameterizations()) {
    if (p.id == id && p.regime == regime) {
      PopulationModel m;
      m.id = id;
      m.regime = regime;
      m.gamma = p.gamma;
      return m;
    }
  }
  throw Error(ErrorCode::UnknownModel, "no built-in parameterization for this model");
}

Eigen::MatrixXd population_design(PopulationId id, const Eigen::MatrixXd& covariates) {
  const Eigen::Index n = covariates.rows();
  const auto x1 = covariates.col(0).array();
  const auto x2 = covariates.col(1).array();
  Eigen::MatrixXd z(n, id == PopulationId::Pop2Fractional ? 5 : 4);
  z.col(0).setOnes();
  z.col(1) = x1;
  z.col(2) = x2;
  if (id == PopulationId::Pop2Fractional) {
    z.col(3) = x1 * x1;
    z.col(4) = x1 * x2;
  } else {
    z.col(3) = x1 * x2;
  }
  return z;
}

Population generate_population(const PopulationModel& model, Eigen::Index size,
                               std::uint64_t seed) {
  if (size < 1) throw Error(ErrorCode::UsageError, "population size must be positive");
  for (const auto& g : model.gamma) {
    if (g.size() != model.terms()) {
      throw Error(ErrorCode::UnknownModel, "coefficient vector does not match the model terms");
    }
  }
  if ((model.rho.array() <= 0.0).any() || std::abs(model.rho.sum() - 1.0) > 1e-12) {
    throw Error(ErrorCode::UsageError, "assignment probabilities must be positive and sum to 1");
  }

  Population pop;
  pop.id = model.id;
  pop.regime = model.regime;
  pop.rho = model.rho;
  pop.covariates.resize(size, 2);
  pop.potential_outcomes.resize(size, 3);

  const double r2_scale = model.id == PopulationId::Pop1Linear ||
                                  (model.id == PopulationId::Pop3Poisson &&
                                   model.latent == LatentRecipe::Shared)
                              ? 3.0 / std::sqrt(2.0)
                              : 1.0 / std::sqrt(2.0);
  const double r3_scale = 1.0 / std::sqrt(2.0);

  for (Eigen::Index start = 0; start < size; start += kChunkRows) {
    const Eigen::Index stop = std::min(size, start + kChunkRows);
    const auto chunk = static_cast<std::uint64_t>(start / kChunkRows);
    SplitMix64 engine(substream_seed(seed, kStreamCovariates, chunk));
    std::normal_distribution<double> normal;
    std::array<SplitMix64, 3> count_engines{
        SplitMix64(substream_seed(seed, kStreamCounts + 0, chunk)),
        SplitMix64(substream_seed(seed, kStreamCounts + 1, chunk)),
        SplitMix64(substream_seed(seed, kStreamCounts + 2, chunk))};

    for (Eigen::Index i = start; i < stop; ++i) {
      const double k1 = 2.0 * normal(engine);
      const double k2 = 2.0 * normal(engine);
      const double v = normal(engine);
      const double r1 = normal(engine);
      const double v1 = normal(engine);
      const double v2 = normal(engine);
      const double x1 = k1 + v;
      const double x2 = (k2 + v / 2.0 > 0.0) ? 1.0 : 0.0;
      pop.covariates(i, 0) = x1;
      pop.covariates(i, 1) = x2;
      const std::array<double, 3> r{r1, r2_scale * (r1 + v1), r3_scale * (r1 + v2)};

      for (int g = 0; g < 3; ++g) {
        const Eigen::VectorXd& c = model.gamma[static_cast<std::size_t>(g)];
        double index = 0.0;
        if (model.id == PopulationId::Pop2Fractional) {
          index = c(0) + c(1) * x1 + c(2) * x2 + c(3) * x1 * x1 + c(4) * x1 * x2;
        } else {
          index = c(0) + c(1) * x1 + c(2) * x2 + c(3) * x1 * x2;
        }
        double y = 0.0;
        switch (model.id) {
          case PopulationId::Pop1Linear: y = index + r[static_cast<std::size_t>(g)]; break;
          case PopulationId::Pop2Fractional:
            y = normal_cdf(index + r[static_cast<std::size_t>(g)]);
            break;
          case PopulationId::Pop3Poisson: {
            std::poisson_distribution<long long> counts(std::exp(index));
            const auto draw =
                static_cast<double>(counts(count_engines[static_cast<std::size_t>(g)]));
            y = std::exp(r[static_cast<std::size_t>(g)] / 8.0) * draw;
            break;
          }
        }
        pop.potential_outcomes(i, g) = y;
      }
    }
  }
  if (!pop.potential_outcomes.allFinite()) {
    throw Error(ErrorCode::NonFinite, "population has non-finite potential outcomes");
  }
  pop.true_means = pop.potential_outcomes.colwise().mean().transpose();
  return pop;
}

Eigen::Vector3d population_r_squared(const Population& pop) {
  const Eigen::MatrixXd z = population_design(pop.id, pop.covariates);
  Eigen::Vector3d out;
  for (int g = 0; g < 3; ++g) {
    const Eigen::VectorXd y = pop.potential_outcomes.col(g);
    const OlsFit fit = ols(y, z);
    const double tss = (y.array() - y.mean()).square().sum();
    out(g) = tss > 0.0 ? 1.0 - fit.residuals.squaredNorm() / tss : 0.0;
  }
  return out;
}

int arm_for_uniform(double u, const Eigen::VectorXd& rho) {
  double upper = 0.0;
  const auto arms = static_cast<int>(rho.size());
  for (int g = 0; g < arms - 1; ++g) {
    upper += rho(g);
    if (u < upper) return g;
  }
  return arms - 1;
}

std::vector<int> assign_treatments(Eigen::Index n, const Eigen::VectorXd& rho, std::uint64_t seed) {
  SplitMix64 engine(substream_seed(seed, kStreamAssignment, 0));
  std::vector<int> out(static_cast<std::size_t>(n));
  for (auto& g : out) g = arm_for_uniform(uniform01(engine), rho);
  return out;
}

std::string EstimatorSpec::label() const {
  std::string s(to_string(id));
  if (family && (id == EstimatorId::NPRA || id == EstimatorId::NSRA)) {
    s += "(" + std::string(to_string(*family)) + ")";
  }
  return s;
}

FamilyId natural_family(PopulationId id) noexcept {
  switch (id) {
    case PopulationId::Pop1Linear: return FamilyId::GaussianLinear;
    case PopulationId::Pop2Fractional: return FamilyId::BernoulliLogistic;
    case PopulationId::Pop3Poisson: return FamilyId::PoissonExponential;
  }
  return FamilyId::GaussianLinear;
}

SimulationSummary run_replications(const Population& pop, const ReplicationConfig& config) {
  const Eigen::Index size = pop.size();
  if (config.n < 2 || config.n > size) {
    throw Error(ErrorCode::UsageError, "sample size must be between 2 and the population size");
  }
  if (config.reps < 1) throw Error(ErrorCode::UsageError, "reps must be at least 1");
  if (config.estimators.empty()) throw Error(ErrorCode::UsageError, "no estimators requested");

  const std::size_t n_est = config.estimators.size();
  std::vector<RepRecord> records(static_cast<std::size_t>(config.reps));
  std::atomic<int> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  const Eigen::VectorXd rho = pop.rho;
  const std::vector<std::string> labels{"1", "2", "3"};

  auto worker = [&] {
    try {
      std::vector<Eigen::Index> index(static_cast<std::size_t>(size));
      for (Eigen::Index i = 0; i < size; ++i) index[static_cast<std::size_t>(i)] = i;
      std::vector<std::pair<Eigen::Index, Eigen::Index>> swaps;
      swaps.reserve(static_cast<std::size_t>(config.n));

      for (int rep = next.fetch_add(1); rep < config.reps; rep = next.fetch_add(1)) {
        SplitMix64 engine(substream_seed(config.seed, kStreamReplication,
                                         static_cast<std::uint64_t>(rep)));
        // Partial Fisher-Yates: the first n slots become the sample.
        swaps.clear();
        for (Eigen::Index j = 0; j < config.n; ++j) {
          std::uniform_int_distribution<Eigen::Index> pick(j, size - 1);
          const Eigen::Index k = pick(engine);
          std::swap(index[static_cast<std::size_t>(j)], index[static_cast<std::size_t>(k)]);
          swaps.emplace_back(j, k);
        }

        std::vector<int> group(static_cast<std::size_t>(config.n));
        Eigen::VectorXd y(config.n);
        Eigen::MatrixXd x(config.n, 2);
        for (Eigen::Index j = 0; j < config.n; ++j) {
          const Eigen::Index row = index[static_cast<std::size_t>(j)];
          const int g = arm_for_uniform(uniform01(engine), rho);
          group[static_cast<std::size_t>(j)] = g;
          y(j) = pop.potential_outcomes(row, g);
          x.row(j) = pop.covariates.row(row);
        }
        for (auto it = swaps.rbegin(); it != swaps.rend(); ++it) {
          std::swap(index[static_cast<std::size_t>(it->first)],
                    index[static_cast<std::size_t>(it->second)]);
        }

        RepRecord& rec = records[static_cast<std::size_t>(rep)];
        rec.mu.assign(n_est, Eigen::Vector3d::Zero());
        rec.se.assign(n_est, Eigen::Vector3d::Zero());
        rec.failure.assign(n_est, {});
        rec.ok.assign(n_est, false);
        try {
          const Dataset ds(std::move(group), std::move(y), std::nullopt, std::move(x),
                           {"x1", "x2"}, labels);
          for (std::size_t e = 0; e < n_est; ++e) {
            const EstimatorSpec& spec = config.estimators[e];
            try {
              const Estimate est = run_estimator(ds, spec.id, spec.family);
              rec.mu[e] = est.result.mu_hat;
              rec.se[e] = est.result.standard_errors();
              rec.ok[e] = true;
            } catch (const Error& err) {
              if (err.code() == ErrorCode::UsageError) throw;
              rec.failure[e] = err.what();
            }
          }
        } catch (const Error& err) {
          if (err.code() == ErrorCode::UsageError) throw;
          for (std::size_t e = 0; e < n_est; ++e) rec.failure[e] = err.what();
        }
      }
    } catch (...) {
      std::lock_guard lock(fatal_mutex);
      if (!fatal) fatal = std::current_exception();
      next.store(config.reps);
    }
  };

  unsigned threads = config.threads != 0 ? config.threads : std::thread::hardware_concurrency();
  threads = std::clamp(threads, 1U, static_cast<unsigned>(config.reps));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  SimulationSummary summary;
  summary.population = pop.id;
  summary.regime = pop.regime;
  summary.true_means = pop.true_means;
  for (std::size_t e = 0; e < n_est; ++e) {
    SummaryRow row;
    row.estimator = config.estimators[e];
    row.n = config.n;
    row.reps = config.reps;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    std::vector<Eigen::Vector3d> draws;
    std::array<std::vector<double>, 3> ses;
    int first_failure = -1;
    for (int rep = 0; rep < config.reps; ++rep) {
      const RepRecord& rec = records[static_cast<std::size_t>(rep)];
      if (!rec.ok[e]) {
        ++row.failures;
        if (first_failure < 0) first_failure = rep;
        continue;
      }
      draws.push_back(rec.mu[e]);
      sum += rec.mu[e];
      for (int g = 0; g < 3; ++g) ses[static_cast<std::size_t>(g)].push_back(rec.se[e](g));
    }
    if (row.failures > config.max_failure_share * config.reps) {
      throw Error(ErrorCode::EstimatorFailed,
                  row.estimator.label() + " failed in " + std::to_string(row.failures) + " of " +
                      std::to_string(config.reps) + " replications (first: replication " +
                      std::to_string(first_failure + 1) + ": " +
                      records[static_cast<std::size_t>(first_failure)].failure[e] + ")");
    }
    const auto ok = static_cast<double>(draws.size());
    const Eigen::Vector3d mean = sum / ok;
    row.bias = mean - pop.true_means;
    if (draws.size() < 2) {
      row.sd.setConstant(std::nan(""));
    } else {
      Eigen::Vector3d ss = Eigen::Vector3d::Zero();
      for (const auto& d : draws) ss += (d - mean).cwiseAbs2();
      row.sd = (ss / (ok - 1.0)).cwiseSqrt();
    }
    for (int g = 0; g < 3; ++g) row.median_se(g) = median(ses[static_cast<std::size_t>(g)]);
    summary.rows.push_back(row);
  }
  return summary;
}

void write_summary_csv(std::ostream& out, const SimulationSummary& summary, bool header) {
  if (header) {
    out << "model,regime,n,estimator,arm,true_mean,bias,sd,median_se,reps,failures\n";
  }
  for (const auto& row : summary.rows) {
    for (int g = 0; g < 3; ++g) {
      out << to_string(summary.population) << ',' << to_string(summary.regime) << ',' << row.n
          << ',' << row.estimator.label() << ',' << (g + 1) << ','
          << format_number(summary.true_means(g)) << ',' << format_number(row.bias(g)) << ','
          << format_number(row.sd(g)) << ',' << format_number(row.median_se(g)) << ','
          << row.reps << ',' << row.failures << '\n';
    }
  }
}

void print_summary(std::ostream& out, const SimulationSummary& summary) {
  out << "Population " << to_string(summary.population) << ", " << to_string(summary.regime)
      << " R^2; true means (" << fixed4(summary.true_means(0)) << ", "
      << fixed4(summary.true_means(1)) << ", " << fixed4(summary.true_means(2)) << ")\n";
  Eigen::Index current_n = -1;
  char buf[160];
  for (const auto& row : summary.rows) {
    if (row.n != current_n) {
      current_n = row.n;
      out << "\nN = " << row.n << "\n";
      std::snprintf(buf, sizeof buf, "%-34s %-19s %-19s %-19s\n", "", "mu1", "mu2", "mu3");
      out << buf;
      std::snprintf(buf, sizeof buf, "%-34s %-9s %-9s %-9s %-9s %-9s %-9s\n", "Estimator", "Bias",
                    "Sd", "Bias", "Sd", "Bias", "Sd");
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%-34s", row.estimator.label().c_str());
    out << buf;
    for (int g = 0; g < 3; ++g) {
      std::snprintf(buf, sizeof buf, " %-9s %-9s", fixed4(row.bias(g)).c_str(),
                    fixed4(row.sd(g)).c_str());
      out << buf;
    }
    if (row.failures > 0) out << "  (" << row.failures << " failed)";
    out << "\n";
  }
}

}  // namespace raest
