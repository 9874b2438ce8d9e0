#include "raest/estimate.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace raest {
namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(EstimatorId id) noexcept {
  switch (id) {
    case EstimatorId::SM: return "SM";
    case EstimatorId::PRA: return "PRA";
    case EstimatorId::SRA: return "SRA";
    case EstimatorId::NPRA: return "NPRA";
    case EstimatorId::NSRA: return "NSRA";
  }
  return "?";
}

std::string_view to_string(FamilyId id) noexcept {
  switch (id) {
    case FamilyId::GaussianLinear: return "gaussian-linear";
    case FamilyId::BernoulliLogistic: return "bernoulli-logistic";
    case FamilyId::BinomialLogistic: return "binomial-logistic";
    case FamilyId::PoissonExponential: return "poisson-exponential";
  }
  return "?";
}

std::string_view to_string(InfluenceKind kind) noexcept {
  switch (kind) {
    case InfluenceKind::LinearSM: return "linear-SM";
    case InfluenceKind::LinearSRA: return "linear-SRA";
    case InfluenceKind::LinearPRA: return "linear-PRA";
    case InfluenceKind::QmleSRA: return "qmle-SRA";
    case InfluenceKind::QmleNPRA: return "qmle-NPRA";
  }
  return "?";
}

std::optional<EstimatorId> parse_estimator(std::string_view text) {
  const std::string s = lower(text);
  if (s == "sm") return EstimatorId::SM;
  if (s == "pra") return EstimatorId::PRA;
  if (s == "sra") return EstimatorId::SRA;
  if (s == "npra") return EstimatorId::NPRA;
  if (s == "nsra") return EstimatorId::NSRA;
  return std::nullopt;
}

std::optional<FamilyId> parse_family(std::string_view text) {
  const std::string s = lower(text);
  if (s == "gaussian-linear" || s == "gaussian" || s == "linear") return FamilyId::GaussianLinear;
  if (s == "bernoulli-logistic" || s == "bernoulli" || s == "logit")
    return FamilyId::BernoulliLogistic;
  if (s == "binomial-logistic" || s == "binomial") return FamilyId::BinomialLogistic;
  if (s == "poisson-exponential" || s == "poisson") return FamilyId::PoissonExponential;
  return std::nullopt;
}

Eigen::VectorXd EstimatorResult::standard_errors() const {
  return vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

std::optional<Eigen::MatrixXd> InfluenceDecomposition::block_sum() const {
  if (blocks.empty()) return std::nullopt;
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(rows.rows(), rows.cols());
  for (const auto& [name, block] : blocks) total += block;
  return total;
}

}  // namespace raest
