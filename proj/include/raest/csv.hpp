#pragma once

#include "raest/dataset.hpp"

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace raest {

/// Column roles for CSV ingestion. Reserved names are `group`, `y` and
/// `trials`; every other column is a covariate unless `covariates` lists
/// the ones to keep.
struct CsvColumns {
  std::string group = "group";
  std::string outcome = "y";
  std::string trials = "trials";
  std::optional<std::vector<std::string>> covariates;
};

RawTable read_csv(std::istream& in, const CsvColumns& columns = {});
RawTable read_csv_file(const std::string& path, const CsvColumns& columns = {});

}  // namespace raest
