#pragma once

// Exact simulation of the normalized mean-field chain on the lattice simplex.
// A jump i -> j happens at rate (1/h) x_i Q_ij(t, x, u, v); paths are drawn by
// thinning against the uniform bound (d - 1) K / h.

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "xshift/model.hpp"
#include "xshift/rng.hpp"
#include "xshift/simplex.hpp"

namespace xshift {

/// A player's control process for the chain simulator.
///
/// kConstant and kPerStep policies are read once at the start of a simulated
/// interval and held; kFeedback policies are re-read at every candidate event
/// with the current state, so they may change between jumps.
class ControlPolicy {
 public:
  using Chooser = std::function<ControlId(double t, const LatticeState& x, RandomStream& rng)>;
  enum class Kind { kConstant, kPerStep, kFeedback };

  static ControlPolicy constant(ControlId c, std::string name = "constant") {
    ControlPolicy p;
    p.kind_ = Kind::kConstant;
    p.fixed_ = c;
    p.name_ = std::move(name);
    return p;
  }

  static ControlPolicy per_step(Chooser choose, std::string name) {
    ControlPolicy p;
    p.kind_ = Kind::kPerStep;
    p.choose_ = std::move(choose);
    p.name_ = std::move(name);
    return p;
  }

  static ControlPolicy feedback(Chooser choose, std::string name) {
    ControlPolicy p;
    p.kind_ = Kind::kFeedback;
    p.choose_ = std::move(choose);
    p.name_ = std::move(name);
    return p;
  }

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  bool varies_within_step() const { return kind_ == Kind::kFeedback; }

  ControlId choose(double t, const LatticeState& x, RandomStream& rng) const {
    return kind_ == Kind::kConstant ? fixed_ : choose_(t, x, rng);
  }

 private:
  Kind kind_ = Kind::kConstant;
  ControlId fixed_ = 0;
  Chooser choose_;
  std::string name_;
};

struct JumpEvent {
  double time = 0.0;
  std::size_t from = 0;
  std::size_t to = 0;
};

struct ChainStats {
  std::size_t candidates = 0;
  std::size_t jumps = 0;
};

/// Advances `state` from t0 to t1 in place. Every accepted jump is passed to
/// `on_jump` when given. Throws if the model returns a negative off-diagonal
/// or one above `rate_bound`.
inline ChainStats advance_chain(const RateModel& model, double rate_bound, double t0, double t1,
                                LatticeState& state, const ControlPolicy& u_policy,
                                const ControlPolicy& v_policy, RandomStream& rng,
                                const std::function<void(const JumpEvent&)>& on_jump = {}) {
  ChainStats stats;
  const std::size_t d = model.dimension();
  const int M = state.total();
  const double candidate_rate = static_cast<double>(d - 1) * rate_bound * M;
  if (!(candidate_rate > 0.0) || t1 <= t0) return stats;

  ControlId u = u_policy.choose(t0, state, rng);
  ControlId v = v_policy.choose(t0, state, rng);
  const double limit = rate_bound * (1.0 + 1e-12);

  double t = t0;
  while (true) {
    t += rng.exponential(candidate_rate);
    if (t >= t1) break;
    ++stats.candidates;

    // Type of a uniformly chosen particle: P(i) = x_i.
    int r = static_cast<int>(rng.below(static_cast<std::size_t>(M)));
    std::size_t i = 0;
    while (r >= state.count(i)) r -= state.count(i++);
    std::size_t j = rng.below(d - 1);
    if (j >= i) ++j;

    if (u_policy.varies_within_step()) u = u_policy.choose(t, state, rng);
    if (v_policy.varies_within_step()) v = v_policy.choose(t, state, rng);

    const double q = model.rates(t, state.point(), u, v)(i, j);
    if (q < 0.0 || q > limit) {
      throw Error("rate bound violated: Q(" + std::to_string(i) + "," + std::to_string(j) +
                  ")=" + std::to_string(q) + " outside [0, K=" + std::to_string(rate_bound) +
                  "] at t=" + std::to_string(t) + " state " + state.to_string());
    }
    if (rng.uniform() * rate_bound < q) {
      state.jump(i, j);
      ++stats.jumps;
      if (on_jump) on_jump(JumpEvent{t, i, j});
    }
  }
  return stats;
}

/// One realization of the chain on [t0, t1]: piecewise constant, right-continuous.
class PathSample {
 public:
  PathSample(LatticeState initial, double t0, double t1)
      : initial_(std::move(initial)), final_(initial_), t0_(t0), t1_(t1) {}

  const LatticeState& initial() const { return initial_; }
  const LatticeState& final_state() const { return final_; }
  const std::vector<JumpEvent>& jumps() const { return jumps_; }
  double start() const { return t0_; }
  double end() const { return t1_; }

  LatticeState state_at(double t) const {
    LatticeState s = initial_;
    for (const auto& e : jumps_) {
      if (e.time > t) break;
      s.jump(e.from, e.to);
    }
    return s;
  }

  void append(const JumpEvent& e) {
    jumps_.push_back(e);
    final_.jump(e.from, e.to);
  }

 private:
  LatticeState initial_;
  LatticeState final_;
  std::vector<JumpEvent> jumps_;
  double t0_, t1_;
};

inline PathSample simulate_chain(const RateModel& model, double rate_bound, double t0, double t1,
                                 const LatticeState& y, const ControlPolicy& u_policy,
                                 const ControlPolicy& v_policy, RandomStream& rng) {
  if (!(t0 < t1)) throw Error("simulate_chain needs t0 < t1");
  if (t1 > model.horizon() * (1.0 + 1e-12)) throw Error("simulate_chain beyond the model horizon");
  PathSample path(y, t0, t1);
  LatticeState state = y;
  advance_chain(model, rate_bound, t0, t1, state, u_policy, v_policy, rng,
                [&](const JumpEvent& e) { path.append(e); });
  return path;
}

/// Monte Carlo estimate of a one-interval transition probability.
struct TransitionEntry {
  LatticeState state;
  enum class Kind { kStay, kSingleJump } kind = Kind::kStay;
  std::size_t from = 0;
  std::size_t to = 0;
  double probability = 0.0;
  double standard_error = 0.0;
};

struct TransitionTable {
  std::vector<TransitionEntry> entries;
  /// Mass on states two or more jumps away.
  double other_probability = 0.0;
  double other_standard_error = 0.0;
  std::size_t trials = 0;
};

inline double binomial_standard_error(double p, std::size_t n) {
  return n == 0 ? 0.0 : std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

/// Estimates p(t*, xi, t* + duration, eta, u, v) for eta = xi and every
/// single-jump neighbour xi - h e^i + h e^j from `trials` independent paths.
inline TransitionTable empirical_transition(const RateModel& model, double rate_bound,
                                            double t_star, const LatticeState& xi,
                                            double duration, ControlId u,
                                            const ControlPolicy& v_policy, std::size_t trials,
                                            std::uint64_t seed) {
  if (!(duration > 0.0)) throw Error("transition duration must be positive");
  if (trials == 0) throw Error("need at least one trial");
  const std::size_t d = model.dimension();
  TransitionTable table;
  table.trials = trials;
  table.entries.push_back({xi, TransitionEntry::Kind::kStay, 0, 0, 0.0, 0.0});
  for (std::size_t i = 0; i < d; ++i) {
    if (xi.count(i) == 0) continue;
    for (std::size_t j = 0; j < d; ++j) {
      if (j != i) table.entries.push_back({xi.jumped(i, j), TransitionEntry::Kind::kSingleJump, i, j, 0.0, 0.0});
    }
  }
  const ControlPolicy u_policy = ControlPolicy::constant(u);
  std::vector<std::size_t> hits(table.entries.size(), 0);
  std::size_t other = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    RandomStream rng(seed, StreamTag::kTransition, k);
    LatticeState s = xi;
    advance_chain(model, rate_bound, t_star, t_star + duration, s, u_policy, v_policy, rng);
    bool found = false;
    for (std::size_t e = 0; e < table.entries.size(); ++e) {
      if (table.entries[e].state == s) {
        ++hits[e];
        found = true;
        break;
      }
    }
    if (!found) ++other;
  }
  for (std::size_t e = 0; e < table.entries.size(); ++e) {
    const double p = static_cast<double>(hits[e]) / trials;
    table.entries[e].probability = p;
    table.entries[e].standard_error = binomial_standard_error(p, trials);
  }
  table.other_probability = static_cast<double>(other) / trials;
  table.other_standard_error = binomial_standard_error(table.other_probability, trials);
  return table;
}

}  // namespace xshift
