#pragma once

// Value-field cache files: versioned JSON, one array of node values per time
// slice, nodes in grid order. Doubles are written in shortest round-trip form.

#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "xshift/value.hpp"

namespace xshift {

inline constexpr const char* kFieldFormat = "xshift-value-field";
inline constexpr int kFieldFormatVersion = 1;

inline nlohmann::json field_to_json(const ValueField& field) {
  nlohmann::json slices = nlohmann::json::array();
  const std::size_t n = field.grid().size();
  for (std::size_t k = 0; k <= field.time_steps(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t id = 0; id < n; ++id) row.push_back(field.at(k, id));
    slices.push_back(std::move(row));
  }
  return {{"format", kFieldFormat},
          {"version", kFieldFormatVersion},
          {"model", field.model_name()},
          {"dimension", field.grid().dimension()},
          {"resolution", field.grid().resolution()},
          {"start", field.start()},
          {"horizon", field.horizon()},
          {"time_steps", field.time_steps()},
          {"values", std::move(slices)}};
}

inline ValueField field_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kFieldFormat) throw Error("not a value-field file");
    if (j.at("version").get<int>() != kFieldFormatVersion) {
      throw Error("unsupported value-field version " + std::to_string(j.at("version").get<int>()));
    }
    const auto d = j.at("dimension").get<std::size_t>();
    const auto n = j.at("resolution").get<int>();
    const auto steps = j.at("time_steps").get<std::size_t>();
    auto grid = std::make_shared<const SimplexGrid>(build_simplex_grid(d, n));
    const auto& slices = j.at("values");
    if (slices.size() != steps + 1) throw Error("value-field slice count mismatch");
    std::vector<double> table;
    table.reserve((steps + 1) * grid->size());
    for (const auto& row : slices) {
      if (row.size() != grid->size()) throw Error("value-field node count mismatch");
      for (const auto& v : row) table.push_back(v.get<double>());
    }
    return ValueField(std::move(grid), j.at("start").get<double>(), j.at("horizon").get<double>(),
                      steps, std::move(table), j.at("model").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed value-field file: ") + e.what());
  }
}

inline void save_field(const ValueField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << field_to_json(field).dump() << '\n';
  if (!out) throw Error("write failed for '" + path + "'");
}

inline ValueField load_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open value field '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("cannot parse value field '" + path + "': " + e.what());
  }
  return field_from_json(j);
}

}  // namespace xshift
