#pragma once

// Result tables: a header plus rows of JSON scalars, written as a CSV table
// and a JSON summary. Output depends only on the data, never on timing or
// worker count.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "xshift/model.hpp"
#include "xshift/version.hpp"

namespace xshift {

using ojson = nlohmann::ordered_json;

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ResultTable {
  std::string kind;
  std::vector<std::string> columns;
  std::vector<std::vector<ojson>> rows;
  std::vector<Check> checks;
  ojson summary = ojson::object();   // kind-specific aggregate values
  ojson scenario = ojson::object();  // echo of the inputs
  ojson constants = ojson::object();

  void add_row(std::vector<ojson> row) {
    if (row.size() != columns.size()) throw Error("result row width does not match the header");
    rows.push_back(std::move(row));
  }

  bool passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }
};

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_cell(const ojson& v) {
  if (v.is_null()) return "";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_number()) return v.dump();
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

inline std::string to_csv(const ResultTable& t) {
  std::string out;
  auto line = [&](const auto& cells, auto render) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += render(cells[i]);
    }
    out += '\n';
  };
  line(t.columns, [](const std::string& s) { return csv_cell(ojson(s)); });
  for (const auto& row : t.rows) line(row, [](const ojson& v) { return csv_cell(v); });
  return out;
}

/// JSON keeps full precision; non-finite numbers become strings so they
/// survive the round trip.
inline ojson json_cell(const ojson& v) {
  if (v.is_number_float() && !std::isfinite(v.get<double>())) return format_double(v.get<double>());
  return v;
}

inline ojson to_json(const ResultTable& t) {
  ojson j;
  j["kind"] = t.kind;
  j["library_version"] = kVersion;
  j["passed"] = t.passed();
  j["scenario"] = t.scenario;
  j["constants"] = t.constants;
  ojson checks = ojson::array();
  for (const auto& c : t.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  j["summary"] = t.summary;
  j["columns"] = t.columns;
  ojson rows = ojson::array();
  for (const auto& r : t.rows) {
    ojson o = ojson::object();
    for (std::size_t i = 0; i < r.size(); ++i) o[t.columns[i]] = json_cell(r[i]);
    rows.push_back(std::move(o));
  }
  j["rows"] = rows;
  return j;
}

inline ojson constants_to_json(const ModelConstants& c) {
  auto one = [](const ConstantEstimate& e) {
    return ojson{{"value", e.value}, {"sampled", e.sampled}, {"declared", e.declared}, {"witness", e.witness}};
  };
  ojson gamma = ojson::array();
  for (const auto& [d, g] : c.gamma_table) gamma.push_back({d, g});
  return ojson{{"K", one(c.rate_bound)}, {"L", one(c.drift_lipschitz)}, {"R", one(c.payoff_lipschitz)},
               {"gamma", gamma}};
}

inline void write_text(const std::string& path, const std::string& text) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

/// Writes <base>.csv and <base>.json.
inline void emit_results(const ResultTable& t, const std::string& base) {
  write_text(base + ".csv", to_csv(t));
  write_text(base + ".json", to_json(t).dump(2) + "\n");
}

}  // namespace xshift
