#pragma once

// Bundled example games and the name -> factory registry used by scenarios.

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "xshift/model.hpp"

namespace xshift {

/// Q == 0 in any dimension; payoff x_1. Useful as a static-game sanity case.
inline RateModel zero_model(std::size_t dimension = 2, double horizon = 1.0) {
  return RateModel(
      "zero", dimension, horizon, ControlGrid{0.0}, ControlGrid{0.0},
      [dimension](double, const Coords&, double, double) { return RateMatrix(dimension); },
      [](const Coords& x) { return x[0]; },
      DeclaredConstants{.rate_bound = 0.0, .drift_lipschitz = 0.0, .payoff_lipschitz = 1.0});
}

/// Two types; player one drives type 1 -> 2 at rate u, player two drives
/// 2 -> 1 at rate v, controls on a uniform grid over [0, 1]; payoff x_1.
///
/// With saturated controls u = v = 1 the mean-field state obeys
/// x_1(t) = 1/2 + (x_1(s) - 1/2) exp(-2 (t - s)), which is also the game value
/// trajectory because the payoff is increasing in x_1.
inline RateModel two_type_model(double horizon = 1.0, std::size_t grid_points = 3) {
  const ControlGrid grid = ControlGrid::uniform(0.0, 1.0, grid_points);
  return RateModel(
      "two-type", 2, horizon, grid, grid,
      [](double, const Coords&, double u, double v) {
        RateMatrix q(2);
        q(0, 1) = u;
        q(0, 0) = -u;
        q(1, 0) = v;
        q(1, 1) = -v;
        return q;
      },
      [](const Coords& x) { return x[0]; },
      // sigma = x_1 is 1-Lipschitz in the ambient norm; the sampled quotient on
      // the simplex tops out at 1/sqrt(2).
      DeclaredConstants{.payoff_lipschitz = 1.0});
}

/// Three types with time-inhomogeneous and state-dependent rates. Player one
/// controls the 1 -> 2 and 1 -> 3 flows, player two the 2 -> 1 and 2 -> 3
/// flows; type 3 relaxes back to type 1 at a rate that grows with x_1.
/// Payoff x_1 + x_3 / 2. The Hamiltonian is additively separable in (u, v).
inline RateModel three_type_model(double horizon = 1.0, std::size_t grid_points = 3) {
  const ControlGrid grid = ControlGrid::uniform(0.0, 1.0, grid_points);
  return RateModel(
      "three-type", 3, horizon, grid, grid,
      [horizon](double t, const Coords& x, double u, double v) {
        RateMatrix q(3);
        q(0, 1) = u * (1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * t / horizon));
        q(0, 2) = 0.25 * u;
        q(1, 0) = v;
        q(1, 2) = 0.5 * v;
        q(2, 0) = 0.5 + 0.5 * x[0];
        q.fill_diagonal();
        return q;
      },
      [](const Coords& x) { return x[0] + 0.5 * x[2]; },
      DeclaredConstants{.rate_bound = 1.75, .payoff_lipschitz = std::sqrt(1.25)});
}

/// Named numeric parameters for a model factory. Reading a key marks it as
/// consumed; leftover keys are reported as unknown.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(std::map<std::string, double> values) : values_(std::move(values)) {}

  double get(const std::string& key, double fallback) const {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::size_t get_count(const std::string& key, std::size_t fallback) const {
    const double v = get(key, static_cast<double>(fallback));
    if (v < 1 || v != std::floor(v)) throw Error("model parameter '" + key + "' must be a positive integer");
    return static_cast<std::size_t>(v);
  }

  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
      if (!used_.count(k)) out.push_back(k);
    }
    return out;
  }

  const std::map<std::string, double>& values() const { return values_; }

 private:
  std::map<std::string, double> values_;
  mutable std::set<std::string> used_;
};

class ModelRegistry {
 public:
  using Factory = std::function<RateModel(const ModelParams&)>;

  void add(const std::string& name, Factory factory) {
    std::lock_guard lock(mutex_);
    factories_[name] = std::move(factory);
  }

  bool contains(const std::string& name) const {
    std::lock_guard lock(mutex_);
    return factories_.count(name) > 0;
  }

  std::vector<std::string> names() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [k, v] : factories_) out.push_back(k);
    return out;
  }

  RateModel make(const std::string& name, const ModelParams& params) const {
    Factory f;
    {
      std::lock_guard lock(mutex_);
      auto it = factories_.find(name);
      if (it == factories_.end()) throw Error("unknown model '" + name + "'");
      f = it->second;
    }
    RateModel model = f(params);
    if (auto extra = params.unused(); !extra.empty()) {
      throw Error("unknown parameter '" + extra.front() + "' for model '" + name + "'");
    }
    return model;
  }

 private:
  mutable std::mutex mutex_;
  std::map<std::string, Factory> factories_;
};

/// Process-wide registry preloaded with the bundled models.
inline ModelRegistry& model_registry() {
  static ModelRegistry registry;
  static const bool loaded = [] {
    registry.add("zero", [](const ModelParams& p) {
      return zero_model(p.get_count("dimension", 2), p.get("horizon", 1.0));
    });
    registry.add("two-type", [](const ModelParams& p) {
      return two_type_model(p.get("horizon", 1.0), p.get_count("grid_points", 3));
    });
    registry.add("three-type", [](const ModelParams& p) {
      return three_type_model(p.get("horizon", 1.0), p.get_count("grid_points", 3));
    });
    return true;
  }();
  (void)loaded;
  return registry;
}

}  // namespace xshift
