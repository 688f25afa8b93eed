#pragma once

// Deterministic guide: integrates x' = x Q(t, x, u, v) and moves a player's
// guide along a value-monotone trajectory of the relaxed dynamics.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "xshift/model.hpp"
#include "xshift/value.hpp"

namespace xshift {

struct GuideState {
  SimplexPoint w;
  double t = 0.0;
};

/// The guide starts where the chain starts.
inline GuideState init_guide(double s, const SimplexPoint& y) { return GuideState{y, s}; }

/// Piecewise-constant control schedule (possibly a relaxed mix) as a function of time.
using ControlSchedule = std::function<ControlMix(double t)>;

inline ControlSchedule constant_schedule(ControlId c) {
  return [c](double) { return ControlMix::pure(c); };
}

struct CharacteristicResult {
  SimplexPoint point;
  double displacement = 0.0;
};

namespace detail {

/// x Q with both players' controls possibly mixed.
inline Coords relaxed_drift(const RateModel& model, double t, const Coords& x,
                            const ControlMix& u, const ControlMix& v) {
  auto with_u = [&](ControlId uc) { return mixed_drift(model, t, x, Player::kSecond, v, uc); };
  if (u.is_pure()) return with_u(u.a);
  return axpy(u.lambda * with_u(u.a), 1.0 - u.lambda, with_u(u.b));
}

}  // namespace detail

/// Fourth-order integration of the characteristic ODE from (t0, x0) to t1,
/// projected back onto the simplex. Throws if the projection moves the
/// endpoint by more than 1e-6.
inline CharacteristicResult integrate_characteristic(const RateModel& model, double t0, double t1,
                                                     const SimplexPoint& x0,
                                                     const ControlSchedule& u_schedule,
                                                     const ControlSchedule& v_schedule,
                                                     double ode_step = 0.01) {
  if (!(t1 >= t0)) throw Error("characteristic needs t1 >= t0");
  Coords x = x0.coords();
  if (t1 > t0) {
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((t1 - t0) / ode_step - 1e-9)));
    const double h = (t1 - t0) / static_cast<double>(n);
    auto f = [&](double t, const Coords& y) {
      return detail::relaxed_drift(model, t, y, u_schedule(t), v_schedule(t));
    };
    for (std::size_t s = 0; s < n; ++s) {
      const double t = t0 + s * h;
      const Coords k1 = f(t, x);
      const Coords k2 = f(t + 0.5 * h, axpy(x, 0.5 * h, k1));
      const Coords k3 = f(t + 0.5 * h, axpy(x, 0.5 * h, k2));
      const Coords k4 = f(t + h, axpy(x, h, k3));
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
  }
  const Projection p = SimplexPoint::project(x);
  if (p.displacement > SimplexPoint::kMaxDisplacement) {
    throw Error("characteristic left the simplex (displacement " + std::to_string(p.displacement) + ")");
  }
  return {p.point, p.displacement};
}

struct GuideOptions {
  std::size_t lambda_points = 9;
  double ode_step = 0.01;
  /// eps_mono; the per-step slack is eps_mono * (t+ - t*) / (T - t0).
  double tolerance = 0.0;
};

/// Outcome of one guide update.
struct GuideStep {
  GuideState state;
  ControlMix control;  // the chosen relaxed control of the guide's owner
  double value_before = 0.0;
  double value_after = 0.0;
  bool monotonicity_violation = false;
};

namespace detail {

inline GuideStep advance_guide(const ValueField& field, const RateModel& model, Player owner,
                               double t_star, double t_plus, const SimplexPoint& w_star,
                               ControlId opponent, const GuideOptions& options) {
  if (!(t_plus > t_star)) throw Error("guide update needs t+ > t*");
  const std::size_t own =
      owner == Player::kFirst ? model.u_grid().size() : model.v_grid().size();
  const auto candidates = hull_candidates(own, options.lambda_points);
  const ControlSchedule fixed = constant_schedule(opponent);

  GuideStep out;
  out.value_before = field.eval(t_star, w_star.coords());
  bool have = false;
  for (const ControlMix& mix : candidates) {
    const ControlSchedule mine = [mix](double) { return mix; };
    const auto end = owner == Player::kFirst
                         ? integrate_characteristic(model, t_star, t_plus, w_star, mine, fixed, options.ode_step)
                         : integrate_characteristic(model, t_star, t_plus, w_star, fixed, mine, options.ode_step);
    const double value = field.eval(t_plus, end.point.coords());
    const bool better = owner == Player::kFirst ? value < out.value_after : value > out.value_after;
    if (!have || better) {
      have = true;
      out.value_after = value;
      out.state = GuideState{end.point, t_plus};
      out.control = mix;
    }
  }
  const double slack = options.tolerance * (t_plus - t_star) / (field.horizon() - field.start());
  const double excess = owner == Player::kFirst ? out.value_after - out.value_before
                                                : out.value_before - out.value_after;
  out.monotonicity_violation = excess > slack;
  return out;
}

}  // namespace detail

/// First player's guide update: the endpoint at t+ of a trajectory of the
/// relaxed dynamics with the opponent frozen at v*, chosen to make W as small
/// as possible; flagged when W rises by more than the slack.
inline GuideStep guide_advance_first(const ValueField& field, const RateModel& model,
                                     double t_star, double t_plus, const SimplexPoint& w_star,
                                     ControlId v_star, const GuideOptions& options = {}) {
  return detail::advance_guide(field, model, Player::kFirst, t_star, t_plus, w_star, v_star, options);
}

/// Second player's guide update: mirror image, maximizing W with u* frozen.
inline GuideStep guide_advance_second(const ValueField& field, const RateModel& model,
                                      double t_star, double t_plus, const SimplexPoint& w_star,
                                      ControlId u_star, const GuideOptions& options = {}) {
  return detail::advance_guide(field, model, Player::kSecond, t_star, t_plus, w_star, u_star, options);
}

}  // namespace xshift
