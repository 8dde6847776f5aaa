#pragma once

// Tab-delimited ingestion of per-hypothesis statistics and robust null-scale
// fitting.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tailbound/errors.hpp"

namespace tailbound::io {

struct Dataset {
  std::string id_column = "id";
  std::vector<std::string> replicate_columns;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> replicate_values;
  std::vector<double> averaged;
  std::size_t dropped = 0;  // rows with no usable replicate

  std::size_t size() const noexcept { return ids.size(); }
};

// Empty id_column selects the first column; empty replicate_columns selects
// every other column.
struct ColumnSpec {
  std::string id_column;
  std::vector<std::string> replicate_columns;
};

namespace detail {

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.emplace_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool is_missing(std::string_view s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "N/A";
}

inline double parse_cell(std::string_view cell, std::size_t line) {
  const std::string text(cell);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw ParseError("malformed numeric cell '" + text + "'", line);
  }
  return v;
}

inline std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InputError("column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline Dataset read_tsv(std::istream& in, const ColumnSpec& spec = {}) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      for (auto& h : detail::split_tabs(line)) header.emplace_back(detail::trim(h));
      break;
    }
  }
  if (header.empty()) throw InputError("input is empty");

  const std::size_t id_idx =
      spec.id_column.empty() ? 0 : detail::column_index(header, spec.id_column);
  std::vector<std::size_t> rep_idx;
  if (spec.replicate_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i != id_idx) rep_idx.push_back(i);
    }
  } else {
    for (const auto& name : spec.replicate_columns) {
      rep_idx.push_back(detail::column_index(header, name));
    }
  }
  if (rep_idx.empty()) throw InputError("no replicate columns");

  Dataset ds;
  ds.id_column = header[id_idx];
  for (auto i : rep_idx) ds.replicate_columns.push_back(header[i]);

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_tabs(line);
    const auto cell = [&](std::size_t i) {
      return i < cells.size() ? detail::trim(cells[i]) : std::string_view{};
    };
    std::vector<double> reps;
    for (auto i : rep_idx) {
      const auto c = cell(i);
      if (!detail::is_missing(c)) reps.push_back(detail::parse_cell(c, line_no));
    }
    if (reps.empty()) {
      ++ds.dropped;
      continue;
    }
    double sum = 0.0;
    for (double v : reps) sum += v;
    ds.ids.emplace_back(cell(id_idx));
    ds.averaged.push_back(sum / static_cast<double>(reps.size()));
    ds.replicate_values.push_back(std::move(reps));
  }
  return ds;
}

inline Dataset load_tsv(const std::string& path, const ColumnSpec& spec = {}) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read_tsv(in, spec);
}

// Rows with fewer replicates than columns are padded with NA.
inline void write_tsv(std::ostream& out, const Dataset& ds) {
  std::size_t width = ds.replicate_columns.size();
  for (const auto& r : ds.replicate_values) width = std::max(width, r.size());
  out << ds.id_column;
  for (std::size_t j = 0; j < width; ++j) {
    out << '\t'
        << (j < ds.replicate_columns.size() ? ds.replicate_columns[j]
                                            : "rep" + std::to_string(j + 1));
  }
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.ids[i];
    for (std::size_t j = 0; j < width; ++j) {
      out << '\t';
      if (j < ds.replicate_values[i].size()) {
        out << detail::format_double(ds.replicate_values[i][j]);
      } else {
        out << "NA";
      }
    }
    out << '\n';
  }
}

inline void write_tsv(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_tsv(out, ds);
}

inline constexpr double kNormalQuartile = 0.674489750196082;

struct NullScale {
  double sigma = 0.0;
  double variance = 0.0;
  double center = 0.0;  // sample median
  double mad = 0.0;
  std::size_t n = 0;
};

// sigma = MAD / Phi^{-1}(3/4), with the MAD taken about the median.
inline NullScale fit_null_scale(std::vector<double> samples) {
  if (samples.size() < 10) throw ParameterError("null-scale fit needs at least 10 samples");
  for (double v : samples) {
    if (!std::isfinite(v)) throw InputError("null-scale fit requires finite samples");
  }
  const auto med = [](std::vector<double>& v) {
    const std::size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h), v.end());
    const double upper = v[h];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(h));
    return 0.5 * (lower + upper);
  };
  NullScale out;
  out.n = samples.size();
  out.center = med(samples);
  for (double& v : samples) v = std::abs(v - out.center);
  out.mad = med(samples);
  if (!(out.mad > 0.0)) throw DegenerateDataError("median absolute deviation is zero");
  out.sigma = out.mad / kNormalQuartile;
  out.variance = out.sigma * out.sigma;
  return out;
}

}  // namespace tailbound::io
