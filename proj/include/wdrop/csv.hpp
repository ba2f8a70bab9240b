#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wdrop/dataset.hpp"
#include "wdrop/predict.hpp"

namespace wdrop {

/// Error raised for unreadable or malformed data files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Numeric table read from a CSV file with a header row.
struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> rejected_lines;  // 1-based file lines that were skipped
};

/// Reads a comma-separated numeric table. Rows with missing or non-numeric
/// cells are skipped and reported; a column with no numeric cell at all is
/// treated as categorical and rejected with an error naming it.
inline NumericTable read_numeric_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  NumericTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw DataError("'" + path + "': missing header row");
  for (auto f : detail::split_fields(line)) t.header.emplace_back(f);
  const std::size_t ncol = t.header.size();

  std::vector<std::size_t> numeric_cells(ncol, 0);
  std::size_t data_rows = 0;
  std::vector<double> row(ncol);
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    ++data_rows;
    const auto fields = detail::split_fields(line);
    bool ok = fields.size() == ncol;
    for (std::size_t j = 0; j < std::min(ncol, fields.size()); ++j) {
      if (detail::parse_number(fields[j], row[j]))
        ++numeric_cells[j];
      else
        ok = false;
    }
    if (ok)
      t.rows.push_back(row);
    else
      t.rejected_lines.push_back(line_no);
  }
  if (data_rows > 0)
    for (std::size_t j = 0; j < ncol; ++j)
      if (numeric_cells[j] == 0)
        throw DataError("'" + path + "': column '" + t.header[j] +
                        "' is non-numeric (categorical); remove it before loading");
  return t;
}

/// Loads a regression dataset: target_column names the target (empty = last
/// column), every other column becomes a feature in file order.
/// Skipped row numbers are written to rejected_lines when given.
inline RegressionDataset load_csv(const std::string& path, const std::string& target_column = {},
                                  std::vector<std::size_t>* rejected_lines = nullptr) {
  NumericTable t = read_numeric_table(path);
  if (t.header.size() < 2) throw DataError("'" + path + "': need at least one feature and one target column");
  std::size_t target = t.header.size() - 1;
  if (!target_column.empty()) {
    target = t.header.size();
    for (std::size_t j = 0; j < t.header.size(); ++j)
      if (t.header[j] == target_column) target = j;
    if (target == t.header.size())
      throw DataError("'" + path + "': target column '" + target_column + "' not found");
  }
  if (t.rows.empty()) throw DataError("'" + path + "': zero usable rows");
  if (rejected_lines) *rejected_lines = t.rejected_lines;

  RegressionDataset d;
  const auto slash = path.find_last_of('/');
  d.name = path.substr(slash == std::string::npos ? 0 : slash + 1);
  if (d.name.size() > 4 && d.name.ends_with(".csv")) d.name.resize(d.name.size() - 4);
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  const auto dim = static_cast<Eigen::Index>(t.header.size() - 1);
  d.features.resize(n, dim);
  d.targets.resize(n, 1);
  for (std::size_t j = 0; j < t.header.size(); ++j)
    (j == target ? d.target_names : d.feature_names).push_back(t.header[j]);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < t.header.size(); ++j) {
      const double v = t.rows[static_cast<std::size_t>(i)][j];
      if (j == target)
        d.targets(i, 0) = v;
      else
        d.features(i, col++) = v;
    }
  }
  d.validate();
  return d;
}

/// Writes features then targets with a header row; values use %.17g so that
/// reading the file back reproduces them exactly.
inline void write_csv(const RegressionDataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  std::string header;
  for (Eigen::Index j = 0; j < d.features.cols(); ++j) {
    header += j < static_cast<Eigen::Index>(d.feature_names.size()) ? d.feature_names[static_cast<std::size_t>(j)]
                                                                      : "x" + std::to_string(j);
    header += ',';
  }
  for (Eigen::Index j = 0; j < d.targets.cols(); ++j) {
    if (j > 0) header += ',';
    header += j < static_cast<Eigen::Index>(d.target_names.size()) ? d.target_names[static_cast<std::size_t>(j)]
                                                                     : "y" + std::to_string(j);
  }
  out << header << '\n';
  for (Eigen::Index i = 0; i < d.features.rows(); ++i) {
    std::string line;
    for (Eigen::Index j = 0; j < d.features.cols(); ++j) line += detail::format_double(d.features(i, j)) + ',';
    for (Eigen::Index j = 0; j < d.targets.cols(); ++j) {
      if (j > 0) line += ',';
      line += detail::format_double(d.targets(i, j));
    }
    out << line << '\n';
  }
  if (!out) throw DataError("I/O error while writing '" + path + "'");
}

/// Scored predictions from an external model: columns mu, sigma, y.
struct PredictionTable {
  PredictiveDistribution pred;
  Matrix y;
  std::vector<std::size_t> rejected_lines;
};

inline PredictionTable load_prediction_csv(const std::string& path) {
  NumericTable t = read_numeric_table(path);
  auto find = [&](const std::string& name) {
    for (std::size_t j = 0; j < t.header.size(); ++j)
      if (t.header[j] == name) return j;
    throw DataError("'" + path + "': required column '" + name + "' not found (need mu, sigma, y)");
  };
  const std::size_t cm = find("mu"), cs = find("sigma"), cy = find("y");
  if (t.rows.empty()) throw DataError("'" + path + "': zero usable rows");
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  PredictionTable out;
  out.pred.mu.resize(n, 1);
  out.pred.sigma.resize(n, 1);
  out.y.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = t.rows[static_cast<std::size_t>(i)];
    if (r[cs] < 0) throw DataError("'" + path + "': negative sigma in data row " + std::to_string(i + 1));
    out.pred.mu(i, 0) = r[cm];
    out.pred.sigma(i, 0) = r[cs];
    out.y(i, 0) = r[cy];
  }
  out.rejected_lines = std::move(t.rejected_lines);
  return out;
}

}  // namespace wdrop
