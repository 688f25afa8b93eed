#pragma once

// Exact Kolmogorov forward evolution of the state distribution for lattices
// small enough to enumerate. This is the oracle the simulator is checked against.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "xshift/ctmc.hpp"
#include "xshift/lattice.hpp"
#include "xshift/model.hpp"

namespace xshift {

/// Probability weights over an enumerated lattice.
class Distribution {
 public:
  Distribution(std::shared_ptr<const std::vector<LatticeState>> states, std::vector<double> weights)
      : states_(std::move(states)), weights_(std::move(weights)) {
    if (!states_ || states_->size() != weights_.size()) throw Error("distribution size mismatch");
    double total = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw Error("distribution weights must be nonnegative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-10) throw Error("distribution weights must sum to one");
    index_ = std::make_shared<LatticeIndex>(*states_);
  }

  static Distribution point_mass(const LatticeState& y, std::size_t cap = kDefaultLatticeCap) {
    auto states = std::make_shared<const std::vector<LatticeState>>(
        enumerate_lattice(y.size(), y.total(), cap));
    std::vector<double> w(states->size(), 0.0);
    const LatticeIndex idx(*states);
    w[*idx.find(y)] = 1.0;
    return Distribution(std::move(states), std::move(w));
  }

  const std::vector<LatticeState>& states() const { return *states_; }
  const std::shared_ptr<const std::vector<LatticeState>>& shared_states() const { return states_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }

  std::optional<std::size_t> find(const LatticeState& s) const { return index_->find(s); }

  double weight_of(const LatticeState& s) const {
    auto k = find(s);
    return k ? weights_[*k] : 0.0;
  }

  double expectation(const std::function<double(const Coords&)>& f) const {
    double e = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      if (weights_[k] != 0.0) e += weights_[k] * f((*states_)[k].point());
    }
    return e;
  }

  /// The unique point-mass state, if this is a point mass.
  std::optional<LatticeState> atom() const {
    std::optional<LatticeState> out;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      if (weights_[k] == 1.0) out = (*states_)[k];
    }
    return out;
  }

 private:
  std::shared_ptr<const std::vector<LatticeState>> states_;
  std::vector<double> weights_;
  std::shared_ptr<const LatticeIndex> index_;
};

inline double total_variation(const Distribution& a, const std::vector<double>& b) {
  double tv = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) tv += std::abs(a.weights()[k] - b[k]);
  return 0.5 * tv;
}

struct MasterOptions {
  /// Fixed RK4 step; zero selects min(0.01, 0.1 h / K).
  double step = 0.0;
  /// K used for the automatic step; negative means "sample it from the model".
  double rate_bound = -1.0;
};

namespace detail {

/// Jump structure of the generator at one time, for per-state controls.
struct GeneratorSlice {
  std::vector<std::size_t> source, target;
  std::vector<double> rate;
  std::vector<double> exit;  // total outgoing rate per state
};

class MasterSystem {
 public:
  MasterSystem(const RateModel& model, const Distribution& dist0, double t0,
               const ControlPolicy& u, const ControlPolicy& v)
      : model_(model), dist0_(dist0), u_(u), v_(v), rng_(0, StreamTag::kChain, 0) {
    const auto held = [&](const ControlPolicy& p) -> std::optional<ControlId> {
      if (p.kind() == ControlPolicy::Kind::kFeedback) return std::nullopt;
      if (p.kind() == ControlPolicy::Kind::kConstant) return p.choose(t0, dist0.states()[0], rng_);
      auto a = dist0.atom();
      if (!a) throw Error("per-step policies need a point-mass initial distribution in the oracle");
      return p.choose(t0, *a, rng_);
    };
    u_held_ = held(u_);
    v_held_ = held(v_);
  }

  const GeneratorSlice& at(double t) {
    if (cached_ && cached_t_ == t) return slice_;
    const auto& states = dist0_.states();
    const std::size_t d = model_.dimension();
    slice_.source.clear();
    slice_.target.clear();
    slice_.rate.clear();
    slice_.exit.assign(states.size(), 0.0);
    for (std::size_t s = 0; s < states.size(); ++s) {
      const LatticeState& st = states[s];
      const ControlId u = u_held_ ? *u_held_ : u_.choose(t, st, rng_);
      const ControlId v = v_held_ ? *v_held_ : v_.choose(t, st, rng_);
      const RateMatrix q = model_.rates(t, st.point(), u, v);
      for (std::size_t i = 0; i < d; ++i) {
        if (st.count(i) == 0) continue;
        for (std::size_t j = 0; j < d; ++j) {
          if (j == i) continue;
          const double r = st.count(i) * q(i, j);  // (1/h) x_i Q_ij
          if (r == 0.0) continue;
          slice_.source.push_back(s);
          slice_.target.push_back(*dist0_.find(st.jumped(i, j)));
          slice_.rate.push_back(r);
          slice_.exit[s] += r;
        }
      }
    }
    cached_ = true;
    cached_t_ = t;
    return slice_;
  }

  /// dp/dt = p G_t.
  void derivative(double t, const std::vector<double>& p, std::vector<double>& dp) {
    const GeneratorSlice& g = at(t);
    for (std::size_t s = 0; s < p.size(); ++s) dp[s] = -p[s] * g.exit[s];
    for (std::size_t e = 0; e < g.rate.size(); ++e) dp[g.target[e]] += p[g.source[e]] * g.rate[e];
  }

  /// sum_s p_s (G_t f)(s).
  double generator_expectation(double t, const std::vector<double>& p,
                               const std::vector<double>& f) {
    const GeneratorSlice& g = at(t);
    double acc = 0.0;
    for (std::size_t e = 0; e < g.rate.size(); ++e) {
      acc += p[g.source[e]] * g.rate[e] * (f[g.target[e]] - f[g.source[e]]);
    }
    return acc;
  }

 private:
  const RateModel& model_;
  const Distribution& dist0_;
  const ControlPolicy& u_;
  const ControlPolicy& v_;
  RandomStream rng_;
  std::optional<ControlId> u_held_, v_held_;
  GeneratorSlice slice_;
  bool cached_ = false;
  double cached_t_ = 0.0;
};

inline double sampled_rate_bound(const RateModel& model) {
  if (model.declared().rate_bound) return *model.declared().rate_bound;
  ConstantSampling spec;
  spec.samples = 4000;
  spec.gamma_deltas.clear();
  return estimate_constants(model, spec, 0x5eed).K();
}

struct EvolveResult {
  std::vector<double> weights;
  double integral = 0.0;
};

/// Classic RK4 on the master equation, optionally carrying the running
/// integral of E[(G_t f)(X_t)] as an extra component.
inline EvolveResult evolve(const RateModel& model, double t0, double t1, const Distribution& dist0,
                           const ControlPolicy& u, const ControlPolicy& v,
                           const MasterOptions& options, const std::vector<double>* f) {
  if (!(t1 >= t0)) throw Error("master_evolve needs t1 >= t0");
  MasterSystem sys(model, dist0, t0, u, v);
  EvolveResult out;
  out.weights = dist0.weights();
  if (t1 == t0) return out;

  double step = options.step;
  if (step <= 0.0) {
    const double K = options.rate_bound >= 0.0 ? options.rate_bound : sampled_rate_bound(model);
    const double h = dist0.states().front().spacing();
    step = K > 0.0 ? std::min(0.01, 0.1 * h / K) : 0.01;
  }
  const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / step - 1e-9));
  const double dt = (t1 - t0) / static_cast<double>(std::max<std::size_t>(n, 1));

  const std::size_t S = out.weights.size();
  std::vector<double> k1(S), k2(S), k3(S), k4(S), tmp(S);
  std::vector<double>& p = out.weights;
  for (std::size_t s = 0; s < std::max<std::size_t>(n, 1); ++s) {
    const double t = t0 + s * dt;
    double i1 = 0, i2 = 0, i3 = 0, i4 = 0;
    sys.derivative(t, p, k1);
    if (f) i1 = sys.generator_expectation(t, p, *f);
    for (std::size_t k = 0; k < S; ++k) tmp[k] = p[k] + 0.5 * dt * k1[k];
    sys.derivative(t + 0.5 * dt, tmp, k2);
    if (f) i2 = sys.generator_expectation(t + 0.5 * dt, tmp, *f);
    for (std::size_t k = 0; k < S; ++k) tmp[k] = p[k] + 0.5 * dt * k2[k];
    sys.derivative(t + 0.5 * dt, tmp, k3);
    if (f) i3 = sys.generator_expectation(t + 0.5 * dt, tmp, *f);
    for (std::size_t k = 0; k < S; ++k) tmp[k] = p[k] + dt * k3[k];
    sys.derivative(t + dt, tmp, k4);
    if (f) i4 = sys.generator_expectation(t + dt, tmp, *f);
    double lowest = 0.0;
    for (std::size_t k = 0; k < S; ++k) {
      p[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
      lowest = std::min(lowest, p[k]);
    }
    out.integral += dt / 6.0 * (i1 + 2.0 * i2 + 2.0 * i3 + i4);
    if (lowest < -1e-9) {
      throw Error("master equation step failure: probability " + std::to_string(lowest) +
                  " at t=" + std::to_string(t + dt) + " with step " + std::to_string(dt));
    }
  }
  double total = 0.0;
  for (double& w : p) {
    w = std::max(w, 0.0);
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw Error("master equation lost probability mass: total " + std::to_string(total));
  }
  for (double& w : p) w /= total;
  return out;
}

}  // namespace detail

/// Evolves dist0 from t0 to t1 under the given control processes. Constant
/// and feedback policies work for any initial law; per-step policies are held
/// at their value for the initial state, which requires a point mass.
inline Distribution master_evolve(const RateModel& model, double t0, double t1,
                                  const Distribution& dist0, const ControlPolicy& u,
                                  const ControlPolicy& v, const MasterOptions& options = {}) {
  auto r = detail::evolve(model, t0, t1, dist0, u, v, options, nullptr);
  return Distribution(dist0.shared_states(), std::move(r.weights));
}

inline Distribution master_evolve(const RateModel& model, double t0, double t1,
                                  const Distribution& dist0, ControlId u, ControlId v,
                                  const MasterOptions& options = {}) {
  return master_evolve(model, t0, t1, dist0, ControlPolicy::constant(u), ControlPolicy::constant(v),
                       options);
}

/// |E f(X(t1)) - f(y) - int_{t0}^{t1} E (L_tau f)(X(tau)) d tau|, everything
/// from the master equation.
inline double dynkin_residual(const RateModel& model, const std::function<double(const Coords&)>& f,
                              double t0, double t1, const LatticeState& y, ControlId u, ControlId v,
                              const MasterOptions& options = {}) {
  const Distribution start = Distribution::point_mass(y);
  std::vector<double> fv(start.size());
  for (std::size_t k = 0; k < fv.size(); ++k) fv[k] = f(start.states()[k].point());
  const auto pu = ControlPolicy::constant(u);
  const auto pv = ControlPolicy::constant(v);
  const auto r = detail::evolve(model, t0, t1, start, pu, pv, options, &fv);
  double ef = 0.0;
  for (std::size_t k = 0; k < fv.size(); ++k) ef += r.weights[k] * fv[k];
  return std::abs(ef - f(y.point()) - r.integral);
}

}  // namespace xshift
