#include "raest/errors.hpp"

namespace raest {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyArm: return "EmptyArm";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::TrialsViolation: return "TrialsViolation";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ArmTooSmall: return "ArmTooSmall";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::Separation: return "Separation";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::GradientNonFinite: return "GradientNonFinite";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::EstimatorFailed: return "EstimatorFailed";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BidOrderViolation: return "BidOrderViolation";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyArm:
    case ErrorCode::NonFinite:
    case ErrorCode::TrialsViolation:
    case ErrorCode::MissingColumn:
    case ErrorCode::ParseError:
      return 3;
    case ErrorCode::RankDeficient:
    case ErrorCode::ArmTooSmall:
    case ErrorCode::NoConvergence:
    case ErrorCode::Separation:
    case ErrorCode::DegenerateSample:
    case ErrorCode::GradientNonFinite:
    case ErrorCode::NotSymmetric:
    case ErrorCode::EstimatorFailed:
      return 4;
    case ErrorCode::DimensionMismatch:
    case ErrorCode::BidOrderViolation:
    case ErrorCode::UnknownModel:
    case ErrorCode::UsageError:
      return 2;
  }
  return 1;
}

}  // namespace raest
