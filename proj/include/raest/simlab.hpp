#pragma once

#include "raest/estimate.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace raest {

enum class PopulationId { Pop1Linear, Pop2Fractional, Pop3Poisson };
enum class Regime { Low, High };

/// How the arm-2 latent error R(2) is built from R(1) and V_1.
enum class LatentRecipe {
  /// (3/sqrt 2)(R1 + V1) for pop1; (1/sqrt 2)(R1 + V1) for pop2 and pop3.
  Default,
  /// (3/sqrt 2)(R1 + V1) for pop1 and pop3; (1/sqrt 2)(R1 + V1) for pop2.
  Shared,
};

std::string_view to_string(PopulationId id) noexcept;
std::string_view to_string(Regime regime) noexcept;
/// Accepts "pop1", "pop1-linear", ... and "low" / "high".
std::optional<PopulationId> parse_population(std::string_view text);
std::optional<Regime> parse_regime(std::string_view text);

struct Parameterization {
  PopulationId id;
  Regime regime;
  std::array<Eigen::VectorXd, 3> gamma;
};

/// The six built-in (population x regime) coefficient sets.
std::vector<Parameterization> builtin_parameterizations();

struct PopulationModel {
  PopulationId id = PopulationId::Pop1Linear;
  Regime regime = Regime::Low;
  std::array<Eigen::VectorXd, 3> gamma;
  Eigen::Vector3d rho = Eigen::Vector3d::Constant(1.0 / 3.0);
  LatentRecipe latent = LatentRecipe::Default;

  /// Number of terms in Z: 4 for pop1 / pop3, 5 for pop2.
  Eigen::Index terms() const noexcept { return id == PopulationId::Pop2Fractional ? 5 : 4; }
};

/// Built-in model with equal assignment probabilities.
PopulationModel population_model(PopulationId id, Regime regime);

struct Population {
  PopulationId id = PopulationId::Pop1Linear;
  Regime regime = Regime::Low;
  Eigen::Vector3d rho = Eigen::Vector3d::Constant(1.0 / 3.0);
  Eigen::MatrixXd potential_outcomes;  // size x 3
  Eigen::MatrixXd covariates;          // size x 2: X1, X2
  Eigen::Vector3d true_means = Eigen::Vector3d::Zero();

  Eigen::Index size() const noexcept { return potential_outcomes.rows(); }
};

/// Draws X1 = K1 + V, X2 = 1[K2 + V/2 > 0] with K1, K2 ~ N(0, sd 2) and
/// V ~ N(0, 1), then the potential outcomes of the model. Rows are generated
/// in fixed-size chunks, each from its own substream.
Population generate_population(const PopulationModel& model, Eigen::Index size,
                               std::uint64_t seed);

/// Design terms Z of the model for the given covariate rows.
Eigen::MatrixXd population_design(PopulationId id, const Eigen::MatrixXd& covariates);

/// Per-arm R^2 of Y(g) regressed on the model's Z over the whole population.
Eigen::Vector3d population_r_squared(const Population& pop);

/// Arm index whose half-open cell [sum_{h<g} rho_h, sum_{h<=g} rho_h)
/// contains u. Values past the last boundary go to the last arm.
int arm_for_uniform(double u, const Eigen::VectorXd& rho);

std::vector<int> assign_treatments(Eigen::Index n, const Eigen::VectorXd& rho, std::uint64_t seed);

struct EstimatorSpec {
  EstimatorId id = EstimatorId::SM;
  std::optional<FamilyId> family;

  std::string label() const;
};

/// Nonlinear family matched to the population: logistic for pop2, Poisson
/// for pop3, Gaussian for pop1.
FamilyId natural_family(PopulationId id) noexcept;

struct ReplicationConfig {
  Eigen::Index n = 1000;
  int reps = 1000;
  std::vector<EstimatorSpec> estimators;
  std::uint64_t seed = 1;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
  /// Abort with EstimatorFailed when more than this share of replications
  /// fail for any estimator.
  double max_failure_share = 0.01;
};

struct SummaryRow {
  EstimatorSpec estimator;
  Eigen::Index n = 0;
  int reps = 0;
  int failures = 0;
  Eigen::Vector3d bias = Eigen::Vector3d::Zero();
  /// NaN when fewer than two replications succeeded.
  Eigen::Vector3d sd = Eigen::Vector3d::Zero();
  Eigen::Vector3d median_se = Eigen::Vector3d::Zero();
};

struct SimulationSummary {
  PopulationId population = PopulationId::Pop1Linear;
  Regime regime = Regime::Low;
  Eigen::Vector3d true_means = Eigen::Vector3d::Zero();
  std::vector<SummaryRow> rows;
};

/// Draws `reps` samples of size n without replacement, assigns arms, reveals
/// the matching potential outcome and runs every requested estimator on
/// (X1, X2). Results are reduced in replication order, so the summary does
/// not depend on the thread count.
SimulationSummary run_replications(const Population& pop, const ReplicationConfig& config);

void write_summary_csv(std::ostream& out, const SimulationSummary& summary, bool header = true);
void print_summary(std::ostream& out, const SimulationSummary& summary);

}  // namespace raest
