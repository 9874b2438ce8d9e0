#include "raest/estimators.hpp"

#include "raest/errors.hpp"
#include "raest/linear.hpp"

#include <string>

namespace raest {

Estimate run_estimator(const Dataset& ds, EstimatorId id, std::optional<FamilyId> family,
                       NsraVcov nsra_vcov) {
  switch (id) {
    case EstimatorId::SM: return estimate_sm(ds);
    case EstimatorId::SRA: return estimate_sra(ds);
    case EstimatorId::PRA: return estimate_pra(ds);
    case EstimatorId::NSRA:
    case EstimatorId::NPRA:
      if (!family) {
        throw Error(ErrorCode::UsageError,
                    std::string(to_string(id)) + " needs a family (--family)");
      }
      return id == EstimatorId::NSRA ? estimate_nsra(ds, Family(*family), nsra_vcov)
                                     : estimate_npra(ds, Family(*family));
  }
  throw Error(ErrorCode::UsageError, "unknown estimator");
}

}  // namespace raest
