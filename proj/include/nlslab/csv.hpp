#pragma once

// Minimal CSV support for the files this library writes: a header row of
// column names followed by comma-separated values, no quoting. Floats are
// printed with 17 significant digits so equal values give identical bytes.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nlslab/spectral.hpp"

namespace nlslab {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    throw std::runtime_error("csv: no column named '" + std::string(name) + "'");
  }

  double number(std::size_t row, std::string_view name) const {
    const auto& cell = rows.at(row).at(column(name));
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0') {
      throw std::runtime_error("csv: '" + cell + "' is not a number");
    }
    return v;
  }

  std::vector<double> numbers(std::string_view name) const {
    std::vector<double> out(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) out[r] = number(r, name);
    return out;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = detail::split_csv_line(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != t.header.size()) {
      throw std::runtime_error("csv: row has " + std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_csv(in);
}

inline void expect_header(const CsvTable& t, const std::vector<std::string>& expected) {
  if (t.header != expected) throw std::runtime_error("csv: unexpected header");
}

// Field snapshots: header `x,re,im`, one row per node in node order.

inline void write_field_snapshot(std::ostream& out, const ComplexField1D& u) {
  out << "x,re,im\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    out << format_double(u.grid().node(i)) << ',' << format_double(u[i].real()) << ','
        << format_double(u[i].imag()) << '\n';
  }
}

inline void write_field_snapshot(const std::string& path, const ComplexField1D& u) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_field_snapshot(out, u);
}

/// Reads a snapshot and reconstructs its grid from the node coordinates:
/// n is the row count and L = n * (x_1 - x_0), checked against x_0 = -L/2.
inline ComplexField1D read_field_snapshot(std::istream& in) {
  const auto t = read_csv(in);
  expect_header(t, {"x", "re", "im"});
  const auto n = t.rows.size();
  if (n < 2) throw std::runtime_error("snapshot: too few rows");
  const auto x = t.numbers("x");
  const double dx = x[1] - x[0];
  const double length = dx * static_cast<double>(n);
  Grid1D grid(n, length);
  if (std::abs(x[0] - grid.node(0)) > 1e-9 * length) {
    throw std::runtime_error("snapshot: nodes do not start at -L/2");
  }
  const auto re = t.numbers("re");
  const auto im = t.numbers("im");
  std::vector<Complex> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = Complex(re[i], im[i]);
  ComplexField1D u(grid, std::move(s));
  if (!u.is_finite()) throw std::runtime_error("snapshot: non-finite sample");
  return u;
}

inline ComplexField1D read_field_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_field_snapshot(in);
}

}  // namespace nlslab
