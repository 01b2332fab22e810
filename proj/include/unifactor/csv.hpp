#pragma once

// Plain numeric CSV: one row per line, comma separated, no header. Blank
// lines are skipped.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "unifactor/format.hpp"
#include "unifactor/matrix.hpp"

namespace unifactor {

/// Matrix input is rejected when |a_ij - a_ji| exceeds this; smaller
/// differences are averaged away.
inline constexpr double kSymmetryTol = 1e-6;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline Matrix parse_csv_rows(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;

    std::vector<double> row;
    std::string_view rest = line;
    for (std::size_t col = 1;; ++col) {
      const auto comma = rest.find(',');
      std::string_view field = trim(rest.substr(0, comma));
      if (!field.empty() && field.front() == '+') field.remove_prefix(1);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() ||
          !std::isfinite(value)) {
        throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ", column " +
                                           std::to_string(col) + ": not a finite number: '" +
                                           std::string(field) + "'");
      }
      row.push_back(value);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(rows.front().size()) + " columns, found " +
                      std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  detail::require(!rows.empty(), ErrorKind::kParse, "csv input is empty");

  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kParse, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

inline SymmetricMatrix parse_matrix_text(std::string_view text) {
  const Matrix m = detail::parse_csv_rows(text);
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "matrix csv has " + std::to_string(m.rows()) +
                                                   " rows and " + std::to_string(m.cols()) +
                                                   " columns; it must be square");
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = i + 1; j < m.cols(); ++j) {
      if (std::abs(m(i, j) - m(j, i)) > kSymmetryTol) {
        throw Error(ErrorKind::kAsymmetric, "entries (" + std::to_string(i + 1) + "," +
                                                std::to_string(j + 1) + ") and (" +
                                                std::to_string(j + 1) + "," +
                                                std::to_string(i + 1) + ") differ");
      }
    }
  }
  return SymmetricMatrix(m);
}

inline DataMatrix parse_data_text(std::string_view text) {
  return DataMatrix(detail::parse_csv_rows(text));
}

inline SymmetricMatrix parse_matrix_csv(const std::string& path) {
  return parse_matrix_text(detail::read_file(path));
}

inline DataMatrix parse_data_csv(const std::string& path) {
  return parse_data_text(detail::read_file(path));
}

inline std::string write_matrix_csv(const Matrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

}  // namespace unifactor
