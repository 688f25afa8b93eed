#pragma once

// Scenario files: JSON objects with a fixed key set (unknown keys are
// rejected). See scenarios/README.md for the schema.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "xshift/models.hpp"
#include "xshift/simplex.hpp"

namespace xshift {

struct Scenario {
  std::string model = "two-type";
  std::map<std::string, double> params;
  std::vector<int> particles{20};        // M values, h = 1/M
  std::vector<std::size_t> steps{100};   // partition sizes m
  std::vector<double> initial{1.0, 0.0};
  double start_time = 0.0;
  std::size_t trials = 1000;
  std::vector<std::string> adversaries{"extremal"};
  std::size_t time_steps = 200;   // value grid n_t
  std::size_t space_steps = 200;  // value grid n_x
  std::size_t lambda_points = 9;
  double mono_coefficient = 0.0;  // zero selects 5 K sqrt(d)
  std::uint64_t seed = 1;
  std::string output = "results";
  std::optional<std::string> value_field;  // cached field file
  // one-step checks
  std::vector<double> deltas{0.02, 0.01, 0.005};
  std::size_t pairs = 100;
  double control_u = 1.0;
  double control_v = 0.0;

  RateModel make_model() const { return model_registry().make(model, ModelParams(params)); }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
  if (!obj.is_object()) throw Error(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw Error("unknown key '" + key + "' in " + where);
  }
}

template <class T>
std::vector<T> scalar_or_list(const nlohmann::json& j) {
  if (j.is_array()) return j.get<std::vector<T>>();
  return {j.get<T>()};
}

}  // namespace detail

inline void validate(const Scenario& s) {
  if (s.particles.empty() || s.steps.empty()) throw Error("scenario needs particles and steps");
  for (int M : s.particles) {
    if (M < 1) throw Error("particle counts must be positive");
  }
  for (std::size_t m : s.steps) {
    if (m < 1) throw Error("partition step counts must be positive");
  }
  if (s.trials < 1) throw Error("trials must be positive");
  if (s.pairs < 1) throw Error("pairs must be positive");
  if (s.time_steps < 1 || s.space_steps < 2) throw Error("value grid needs time_steps >= 1, space_steps >= 2");
  if (s.adversaries.empty()) throw Error("scenario needs at least one adversary");
  if (s.deltas.empty()) throw Error("scenario needs at least one delta");
  for (double d : s.deltas) {
    if (!(d > 0.0)) throw Error("deltas must be positive");
  }
  if (s.lambda_points < 2) throw Error("lambda_points must be at least 2");
  if (s.initial.empty() || s.initial.size() > kMaxTypes) throw Error("bad initial state dimension");
  Coords y(s.initial.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = s.initial[i];
  (void)SimplexPoint(y);
  const RateModel model = s.make_model();
  if (model.dimension() != y.size()) {
    throw Error("initial state has " + std::to_string(y.size()) + " types, model '" + s.model +
                "' has " + std::to_string(model.dimension()));
  }
  if (!(s.start_time >= 0.0 && s.start_time < model.horizon())) throw Error("start_time must lie in [0, T)");
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::reject_unknown;
  Scenario s;
  try {
    reject_unknown(j,
                   {"model", "particles", "steps", "initial", "start_time", "trials", "adversaries",
                    "value_grid", "guide", "seed", "output", "value_field", "lemma"},
                   "scenario");
    if (j.contains("model")) {
      const auto& m = j.at("model");
      if (m.is_string()) {
        s.model = m.get<std::string>();
      } else {
        reject_unknown(m, {"name", "params"}, "model");
        s.model = m.at("name").get<std::string>();
        if (m.contains("params")) s.params = m.at("params").get<std::map<std::string, double>>();
      }
    }
    if (j.contains("particles")) s.particles = detail::scalar_or_list<int>(j.at("particles"));
    if (j.contains("steps")) s.steps = detail::scalar_or_list<std::size_t>(j.at("steps"));
    if (j.contains("initial")) s.initial = j.at("initial").get<std::vector<double>>();
    if (j.contains("start_time")) s.start_time = j.at("start_time").get<double>();
    if (j.contains("trials")) s.trials = j.at("trials").get<std::size_t>();
    if (j.contains("adversaries")) s.adversaries = detail::scalar_or_list<std::string>(j.at("adversaries"));
    if (j.contains("value_grid")) {
      const auto& g = j.at("value_grid");
      reject_unknown(g, {"time_steps", "space_steps"}, "value_grid");
      if (g.contains("time_steps")) s.time_steps = g.at("time_steps").get<std::size_t>();
      if (g.contains("space_steps")) s.space_steps = g.at("space_steps").get<std::size_t>();
    }
    if (j.contains("guide")) {
      const auto& g = j.at("guide");
      reject_unknown(g, {"lambda_points", "mono_coefficient"}, "guide");
      if (g.contains("lambda_points")) s.lambda_points = g.at("lambda_points").get<std::size_t>();
      if (g.contains("mono_coefficient")) s.mono_coefficient = g.at("mono_coefficient").get<double>();
    }
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output")) s.output = j.at("output").get<std::string>();
    if (j.contains("value_field")) s.value_field = j.at("value_field").get<std::string>();
    if (j.contains("lemma")) {
      const auto& l = j.at("lemma");
      reject_unknown(l, {"deltas", "pairs", "controls"}, "lemma");
      if (l.contains("deltas")) s.deltas = detail::scalar_or_list<double>(l.at("deltas"));
      if (l.contains("pairs")) s.pairs = l.at("pairs").get<std::size_t>();
      if (l.contains("controls")) {
        const auto& c = l.at("controls");
        reject_unknown(c, {"u", "v"}, "lemma.controls");
        if (c.contains("u")) s.control_u = c.at("u").get<double>();
        if (c.contains("v")) s.control_v = c.at("v").get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad scenario: ") + e.what());
  }
  validate(s);
  return s;
}

inline nlohmann::ordered_json scenario_to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["model"] = {{"name", s.model}, {"params", s.params}};
  j["particles"] = s.particles;
  j["steps"] = s.steps;
  j["initial"] = s.initial;
  j["start_time"] = s.start_time;
  j["trials"] = s.trials;
  j["adversaries"] = s.adversaries;
  j["value_grid"] = {{"time_steps", s.time_steps}, {"space_steps", s.space_steps}};
  j["guide"] = {{"lambda_points", s.lambda_points}, {"mono_coefficient", s.mono_coefficient}};
  j["seed"] = s.seed;
  j["output"] = s.output;
  if (s.value_field) j["value_field"] = *s.value_field;
  j["lemma"] = {{"deltas", s.deltas},
                {"pairs", s.pairs},
                {"controls", {{"u", s.control_u}, {"v", s.control_v}}}};
  return j;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("cannot parse scenario '" + path + "': " + e.what());
  }
  return scenario_from_json(j);
}

/// Requested start point as a simplex point.
inline SimplexPoint initial_point(const Scenario& s) {
  Coords y(s.initial.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = s.initial[i];
  return SimplexPoint(y);
}

}  // namespace xshift
