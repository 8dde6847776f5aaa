#pragma once

// JSON and CSV serialization of estimates and experiment reports.
//
// Document schema: {"meta": {"version", "seed", "config"}, "results": [...]}.
// Every floating-point value is rounded to 9 significant digits so that
// output is byte-stable across platforms with identical arithmetic.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>

#include "json.hpp"
#include "tailbound/estimator.hpp"
#include "tailbound/simulate.hpp"

#ifndef TAILBOUND_VERSION
#define TAILBOUND_VERSION "0.0.0"
#endif

namespace tailbound::report {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = TAILBOUND_VERSION;

inline double round_significant(double v, int digits = 9) {
  if (v == 0.0) return 0.0;  // drops the sign of -0
  if (!std::isfinite(v)) return v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return std::strtod(buf, nullptr);
}

// Non-finite numbers become null.
inline void round_in_place(Json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    j = std::isfinite(v) ? Json(round_significant(v)) : Json(nullptr);
  } else if (j.is_structured()) {
    for (auto& child : j) round_in_place(child);
  }
}

inline Json to_json(const MixingDistribution& nu) {
  return Json{{"support", nu.support()}, {"weights", nu.weights()}};
}

inline Json to_json(const ZetaEstimate& e, bool with_witness = true) {
  Json j{{"gamma", e.gamma},
         {"zeta_hat", e.zeta_hat},
         {"alpha", e.alpha},
         {"tau", e.tau},
         {"method", to_string(e.method)},
         {"n", e.n},
         {"status", e.status},
         {"residual", e.residual},
         {"lp_solves", e.lp_solves},
         {"lp_iterations", e.lp_iterations},
         {"constraint_points", e.constraint_points},
         {"grid_size", e.grid_size},
         {"coarsened", e.coarsened}};
  if (with_witness) j["witness"] = to_json(e.witness);
  return j;
}

inline Json to_json(const EstimateCurve& c) {
  Json rows = Json::array();
  for (const auto& e : c.entries) rows.push_back(to_json(e, false));
  return rows;
}

// One result object per row, keyed by column name.
inline Json rows_json(const sim::ExperimentReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json obj = Json::object();
    for (std::size_t c = 0; c < r.columns.size(); ++c) obj[r.columns[c]] = row[c];
    rows.push_back(std::move(obj));
  }
  return rows;
}

inline Json to_json(const sim::ExperimentReport& r) {
  Json j{{"scenario", r.scenario},
         {"seed", r.seed},
         {"trials", r.trials},
         {"parameters", r.parameters},
         {"summary", r.summary},
         {"rows", rows_json(r)},
         {"trial_estimates", r.trial_estimates}};
  return j;
}

inline Json document(std::uint64_t seed, Json config, Json results) {
  if (!results.is_array()) results = Json::array({std::move(results)});
  Json doc{{"meta", {{"version", kVersion}, {"seed", seed}, {"config", std::move(config)}}},
           {"results", std::move(results)}};
  round_in_place(doc);
  return doc;
}

inline std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

inline std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
      if (ch == '"') quoted += '"';
      quoted += ch;
    }
    return quoted + "\"";
  }
  return v.dump();
}

// Scalar fields of the result rows; the header comes from the first row and
// structured fields are omitted.
inline std::string to_csv(const Json& results) {
  std::ostringstream out;
  if (!results.is_array() || results.empty()) return "";
  std::vector<std::string> keys;
  for (const auto& [k, v] : results.front().items()) {
    if (!v.is_structured()) keys.push_back(k);
  }
  for (std::size_t i = 0; i < keys.size(); ++i) out << (i ? "," : "") << keys[i];
  out << '\n';
  for (const auto& row : results) {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      out << (i ? "," : "") << (row.contains(keys[i]) ? csv_cell(row[keys[i]]) : "");
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace tailbound::report
