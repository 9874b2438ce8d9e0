#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace raest {

enum class ErrorCode {
  // data validation
  EmptyArm,
  NonFinite,
  TrialsViolation,
  MissingColumn,
  ParseError,
  // numerical
  RankDeficient,
  ArmTooSmall,
  NoConvergence,
  Separation,
  DegenerateSample,
  GradientNonFinite,
  NotSymmetric,
  EstimatorFailed,
  // usage
  DimensionMismatch,
  BidOrderViolation,
  UnknownModel,
  UsageError,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Process exit status for a failure of the given kind: 2 usage, 3 data
/// validation, 4 numerical failure.
int exit_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<int> arm = std::nullopt,
        std::optional<int> column = std::nullopt)
      : std::runtime_error(message), code_(code), arm_(arm), column_(column) {}

  ErrorCode code() const noexcept { return code_; }
  /// Zero-based arm index the failure refers to, if any.
  std::optional<int> arm() const noexcept { return arm_; }
  /// Zero-based design column the failure refers to, if any.
  std::optional<int> column() const noexcept { return column_; }

 private:
  ErrorCode code_;
  std::optional<int> arm_;
  std::optional<int> column_;
};

}  // namespace raest
