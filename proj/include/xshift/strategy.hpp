#pragma once

// Extremal-shift control with guide strategies and the stepwise episode runner
// that couples them with the Markov chain.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "xshift/ctmc.hpp"
#include "xshift/guide.hpp"
#include "xshift/model.hpp"
#include "xshift/value.hpp"

namespace xshift {

/// Control-correction times s = t_0 < t_1 < ... < t_m = T.
class Partition {
 public:
  explicit Partition(std::vector<double> times) : times_(std::move(times)) {
    if (times_.size() < 2) throw Error("partition needs at least two points");
    for (std::size_t k = 1; k < times_.size(); ++k) {
      if (!(times_[k] > times_[k - 1])) throw Error("partition times must increase strictly");
    }
  }

  static Partition uniform(double s, double T, std::size_t m) {
    if (m < 1) throw Error("partition needs at least one step");
    std::vector<double> t(m + 1);
    for (std::size_t k = 0; k <= m; ++k) t[k] = k == m ? T : s + (T - s) * static_cast<double>(k) / m;
    return Partition(std::move(t));
  }

  const std::vector<double>& times() const { return times_; }
  std::size_t steps() const { return times_.size() - 1; }
  double start() const { return times_.front(); }
  double end() const { return times_.back(); }

  double diameter() const {
    double d = 0.0;
    for (std::size_t k = 1; k < times_.size(); ++k) d = std::max(d, times_[k] - times_[k - 1]);
    return d;
  }

 private:
  std::vector<double> times_;
};

struct ExtremalControls {
  ControlId u = 0;
  ControlId v = 0;
};

/// Extremal shift toward the guide for the first player:
///   u* = argmin_u max_v <x - w, x Q(t, x, u, v)>,
///   v* = argmax_v min_u <x - w, x Q(t, x, u, v)>.
/// Ties go to the lowest grid index.
inline ExtremalControls extremal_controls(const RateModel& model, double t, const Coords& x,
                                          const Coords& w) {
  const PayoffTable table(model, t, x, x - w);
  return {table.min_max().first, table.max_min().first};
}

/// Second player's version, measured against its own guide:
///   v* = argmin_v max_u <x - w, x Q>,  u* = argmax_u min_v <x - w, x Q>.
inline ExtremalControls second_player_extremal_controls(const RateModel& model, double t,
                                                        const Coords& x, const Coords& w) {
  const PayoffTable table(model, t, x, x - w);
  return {table.row_max_min().first, table.col_min_max().first};
}

/// Control with guide strategy (selector, guide updater, initializer) built on
/// a value field that serves as supersolution (first player) or subsolution
/// (second player). Holds references only; the field and model must outlive it.
class ControlWithGuideStrategy {
 public:
  ControlWithGuideStrategy(Player role, const ValueField& field, const RateModel& model,
                           GuideOptions options)
      : role_(role), field_(&field), model_(&model), options_(options) {}

  Player role() const { return role_; }
  const ValueField& field() const { return *field_; }
  const GuideOptions& options() const { return options_; }

  ControlId select(double t, const Coords& x, const SimplexPoint& w) const {
    return role_ == Player::kFirst ? extremal_controls(*model_, t, x, w.coords()).u
                                   : second_player_extremal_controls(*model_, t, x, w.coords()).v;
  }

  /// Guide at t+ from the chain state x and guide w observed at t.
  GuideStep advance(double t_plus, double t, const Coords& x, const GuideState& w) const {
    if (role_ == Player::kFirst) {
      const ControlId v_star = extremal_controls(*model_, t, x, w.w.coords()).v;
      return guide_advance_first(*field_, *model_, t, t_plus, w.w, v_star, options_);
    }
    const ControlId u_star = second_player_extremal_controls(*model_, t, x, w.w.coords()).u;
    return guide_advance_second(*field_, *model_, t, t_plus, w.w, u_star, options_);
  }

  GuideState initialize(double s, const SimplexPoint& y) const { return init_guide(s, y); }

 private:
  Player role_;
  const ValueField* field_;
  const RateModel* model_;
  GuideOptions options_;
};

inline ControlWithGuideStrategy make_first_player_strategy(const ValueField& field,
                                                           const RateModel& model,
                                                           GuideOptions options = {}) {
  return ControlWithGuideStrategy(Player::kFirst, field, model, options);
}

inline ControlWithGuideStrategy make_second_player_strategy(const ValueField& field,
                                                            const RateModel& model,
                                                            GuideOptions options = {}) {
  return ControlWithGuideStrategy(Player::kSecond, field, model, options);
}

/// Either a control with guide strategy or a plain control process.
using PlayerSpec = std::variant<ControlWithGuideStrategy, ControlPolicy>;

inline std::string describe(const PlayerSpec& p) {
  if (std::holds_alternative<ControlWithGuideStrategy>(p)) return "extremal";
  return std::get<ControlPolicy>(p).name();
}

struct StepRecord {
  double t = 0.0;
  LatticeState x;
  std::optional<SimplexPoint> guide_first;
  std::optional<SimplexPoint> guide_second;
  /// Controls in force at the start of [t_k, t_{k+1}); absent on the last record.
  std::optional<ControlId> u;
  std::optional<ControlId> v;
  double value_first = std::numeric_limits<double>::quiet_NaN();
  double value_second = std::numeric_limits<double>::quiet_NaN();
  bool violation_first = false;
  bool violation_second = false;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<StepRecord> steps;  // one per partition point
  LatticeState final_state;
  double payoff = 0.0;
  std::vector<JumpEvent> jumps;   // only when requested
  std::size_t guide_updates = 0;
  std::size_t guide_violations = 0;
  /// Squared distance between the final chain state and each player's guide.
  std::optional<double> final_gap_first;
  std::optional<double> final_gap_second;
};

struct EpisodeOptions {
  bool record_jumps = false;
};

/// Runs one coupled episode. At each partition time the chain state is read,
/// guides are advanced from the previous (state, guide) pair, controls are
/// selected, and the chain is simulated to the next partition time. A
/// strategy's control is constant over the step; feedback policies may react
/// to jumps inside the step.
inline TrajectoryRecord run_episode(const RateModel& model, double rate_bound, const LatticeState& y,
                                    const Partition& partition, const PlayerSpec& first,
                                    const PlayerSpec& second, RandomStream& rng,
                                    const EpisodeOptions& options = {}) {
  if (y.size() != model.dimension()) throw Error("initial state dimension does not match the model");
  const auto* s1 = std::get_if<ControlWithGuideStrategy>(&first);
  const auto* s2 = std::get_if<ControlWithGuideStrategy>(&second);
  const auto* p1 = std::get_if<ControlPolicy>(&first);
  const auto* p2 = std::get_if<ControlPolicy>(&second);
  if (s1 && s1->role() != Player::kFirst) throw Error("first player's strategy has the second role");
  if (s2 && s2->role() != Player::kSecond) throw Error("second player's strategy has the first role");

  const auto& times = partition.times();
  TrajectoryRecord rec;
  rec.times = times;
  rec.steps.reserve(times.size());

  LatticeState x = y;
  LatticeState x_prev = y;
  const SimplexPoint y_point(y.point());
  std::optional<GuideState> g1, g2;
  if (s1) g1 = s1->initialize(times[0], y_point);
  if (s2) g2 = s2->initialize(times[0], y_point);

  const std::function<void(const JumpEvent&)> on_jump =
      options.record_jumps ? std::function<void(const JumpEvent&)>(
                                 [&](const JumpEvent& e) { rec.jumps.push_back(e); })
                           : std::function<void(const JumpEvent&)>();

  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    StepRecord step;
    step.t = t;
    step.x = x;
    if (k > 0) {
      const Coords xp = x_prev.point();
      if (s1) {
        const GuideStep gs = s1->advance(t, times[k - 1], xp, *g1);
        g1 = gs.state;
        step.violation_first = gs.monotonicity_violation;
        ++rec.guide_updates;
        rec.guide_violations += gs.monotonicity_violation;
      }
      if (s2) {
        const GuideStep gs = s2->advance(t, times[k - 1], xp, *g2);
        g2 = gs.state;
        step.violation_second = gs.monotonicity_violation;
        ++rec.guide_updates;
        rec.guide_violations += gs.monotonicity_violation;
      }
    }
    const Coords xc = x.point();
    if (g1) {
      step.guide_first = g1->w;
      step.value_first = s1->field().eval(t, g1->w.coords());
    }
    if (g2) {
      step.guide_second = g2->w;
      step.value_second = s2->field().eval(t, g2->w.coords());
    }
    if (k + 1 == times.size()) {
      rec.steps.push_back(std::move(step));
      break;
    }

    ControlPolicy u_chain = ControlPolicy::constant(0);
    ControlPolicy v_chain = ControlPolicy::constant(0);
    if (s1) {
      step.u = s1->select(t, xc, g1->w);
      u_chain = ControlPolicy::constant(*step.u);
    } else if (p1->varies_within_step()) {
      u_chain = *p1;
    } else {
      step.u = p1->choose(t, x, rng);
      u_chain = ControlPolicy::constant(*step.u);
    }
    if (s2) {
      step.v = s2->select(t, xc, g2->w);
      v_chain = ControlPolicy::constant(*step.v);
    } else if (p2->varies_within_step()) {
      v_chain = *p2;
    } else {
      step.v = p2->choose(t, x, rng);
      v_chain = ControlPolicy::constant(*step.v);
    }
    rec.steps.push_back(std::move(step));

    x_prev = x;
    advance_chain(model, rate_bound, t, times[k + 1], x, u_chain, v_chain, rng, on_jump);
  }
  rec.final_state = x;
  rec.payoff = model.payoff(x.point());
  const Coords xf = x.point();
  if (g1) rec.final_gap_first = dot(xf - g1->w.coords(), xf - g1->w.coords());
  if (g2) rec.final_gap_second = dot(xf - g2->w.coords(), xf - g2->w.coords());
  return rec;
}

/// One-step greedy policy on the terminal payoff: the second player maximizes
/// (the first minimizes) the worst case of sigma(x + eta x Q) over the
/// opponent's grid. Re-evaluated at every event.
inline ControlPolicy greedy_policy(const RateModel& model, Player role, double eta = 1e-3) {
  return ControlPolicy::feedback(
      [&model, role, eta](double t, const LatticeState& s, RandomStream&) {
        const Coords x = s.point();
        const std::size_t nu = model.u_grid().size();
        const std::size_t nv = model.v_grid().size();
        auto score = [&](ControlId u, ControlId v) {
          return model.payoff(SimplexPoint::project(axpy(x, eta, drift(model, t, x, u, v))).point.coords());
        };
        ControlId best = 0;
        if (role == Player::kSecond) {
          double best_value = -std::numeric_limits<double>::infinity();
          for (ControlId v = 0; v < nv; ++v) {
            double worst = std::numeric_limits<double>::infinity();
            for (ControlId u = 0; u < nu; ++u) worst = std::min(worst, score(u, v));
            if (worst > best_value) best_value = worst, best = v;
          }
        } else {
          double best_value = std::numeric_limits<double>::infinity();
          for (ControlId u = 0; u < nu; ++u) {
            double worst = -std::numeric_limits<double>::infinity();
            for (ControlId v = 0; v < nv; ++v) worst = std::max(worst, score(u, v));
            if (worst < best_value) best_value = worst, best = u;
          }
        }
        return best;
      },
      "greedy");
}

/// Control redrawn uniformly from the grid at every partition time.
inline ControlPolicy random_policy(std::size_t grid_size) {
  return ControlPolicy::per_step(
      [grid_size](double, const LatticeState&, RandomStream& rng) { return rng.below(grid_size); },
      "random");
}

/// Builds a player from a textual spec: "extremal", "constant:<value>",
/// "random" or "greedy". The model and field must outlive the result.
inline PlayerSpec make_player(const std::string& spec, Player role, const RateModel& model,
                              const ValueField& field, const GuideOptions& options) {
  const ControlGrid& grid = role == Player::kFirst ? model.u_grid() : model.v_grid();
  if (spec == "extremal") return ControlWithGuideStrategy(role, field, model, options);
  if (spec == "random") return random_policy(grid.size());
  if (spec == "greedy") return greedy_policy(model, role);
  if (spec.rfind("constant:", 0) == 0) {
    const std::string arg = spec.substr(9);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(arg, &used);
      if (used != arg.size()) throw Error("trailing characters");
    } catch (const std::exception&) {
      throw Error("bad constant control in player spec '" + spec + "'");
    }
    const auto id = grid.find(value, 1e-9);
    if (!id) throw Error("control value " + arg + " is not on the player's grid");
    return ControlPolicy::constant(*id, spec);
  }
  throw Error("unknown player spec '" + spec + "'");
}

}  // namespace xshift
