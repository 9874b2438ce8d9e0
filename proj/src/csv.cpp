#include "raest/csv.hpp"

#include "raest/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace raest {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    cells.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return cells;
}

double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  if (cell.empty()) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": missing value in column '" +
                                           column + "'");
  }
  std::string lower = cell;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "nan" || lower == "na") return std::numeric_limits<double>::quiet_NaN();
  if (lower == "inf" || lower == "+inf") return std::numeric_limits<double>::infinity();
  if (lower == "-inf") return -std::numeric_limits<double>::infinity();

  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": '" + cell +
                                           "' in column '" + column + "' is not a number");
  }
  return value;
}

}  // namespace

RawTable read_csv(std::istream& in, const CsvColumns& columns) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_line(line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCode::ParseError, "CSV input has no header row");

  auto find = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto group_col = find(columns.group);
  const auto outcome_col = find(columns.outcome);
  if (!group_col) throw Error(ErrorCode::MissingColumn, "no '" + columns.group + "' column");
  if (!outcome_col) throw Error(ErrorCode::MissingColumn, "no '" + columns.outcome + "' column");
  const auto trials_col = find(columns.trials);

  std::vector<std::size_t> covariate_cols;
  RawTable table;
  if (columns.covariates) {
    for (const auto& name : *columns.covariates) {
      const auto c = find(name);
      if (!c) throw Error(ErrorCode::MissingColumn, "no covariate column '" + name + "'");
      covariate_cols.push_back(*c);
      table.covariate_names.push_back(name);
    }
  } else {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == *group_col || c == *outcome_col || (trials_col && c == *trials_col)) continue;
      covariate_cols.push_back(c);
      table.covariate_names.push_back(header[c]);
    }
  }
  table.covariates.resize(covariate_cols.size());
  if (trials_col) table.trials.emplace();

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " fields, got " +
                                             std::to_string(cells.size()));
    }
    if (cells[*group_col].empty()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": missing group");
    }
    table.group.push_back(cells[*group_col]);
    table.outcome.push_back(parse_number(cells[*outcome_col], line_no, columns.outcome));
    if (trials_col) table.trials->push_back(parse_number(cells[*trials_col], line_no, columns.trials));
    for (std::size_t k = 0; k < covariate_cols.size(); ++k) {
      table.covariates[k].push_back(
          parse_number(cells[covariate_cols[k]], line_no, table.covariate_names[k]));
    }
  }
  return table;
}

RawTable read_csv_file(const std::string& path, const CsvColumns& columns) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  return read_csv(in, columns);
}

}  // namespace raest
