#include "bleubound/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "bleubound/errors.hpp"

namespace bleubound {
namespace {

double parse_cell(std::string_view cell, std::size_t line_no) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
    cell.remove_suffix(1);
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    throw NonFiniteInput("line " + std::to_string(line_no) + ": cannot parse '" +
                         std::string(cell) + "' as a finite real");
  }
  return value;
}

}  // namespace

Matrix read_matrix_csv(std::istream& in, bool has_header) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (has_header && line_no == 1) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::size_t row_cols = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      values.push_back(parse_cell(rest.substr(0, comma), line_no));
      ++row_cols;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = row_cols;
    } else if (row_cols != cols) {
      throw ShapeMismatch("line " + std::to_string(line_no) + " has " + std::to_string(row_cols) +
                          " columns, expected " + std::to_string(cols));
    }
    ++rows;
  }
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.flat().begin());
  return m;
}

Matrix read_matrix_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_matrix_csv(in, has_header);
}

void write_matrix_csv(const Matrix& m, std::ostream& out) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << row[c];
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace bleubound
