#pragma once

#include "raest/dataset.hpp"
#include "raest/estimate.hpp"
#include "raest/qmle.hpp"

#include <optional>

namespace raest {

/// Runs one estimator by identifier. NPRA and NSRA need a family and throw
/// UsageError without one; the family is ignored for the linear estimators.
Estimate run_estimator(const Dataset& ds, EstimatorId id,
                       std::optional<FamilyId> family = std::nullopt,
                       NsraVcov nsra_vcov = NsraVcov::Influence);

}  // namespace raest
