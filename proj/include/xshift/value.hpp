#pragma once

// Grid approximation of the deterministic game value on [0, T] x simplex by a
// backward semi-Lagrangian min-max recursion, with barycentric interpolation on
// the Kuhn triangulation of the lattice simplex.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "xshift/lattice.hpp"
#include "xshift/model.hpp"
#include "xshift/parallel.hpp"
#include "xshift/rng.hpp"

namespace xshift {

/// Interpolation stencil: up to d grid nodes with convex weights.
struct Stencil {
  std::array<std::size_t, kMaxTypes> node{};
  std::array<double, kMaxTypes> weight{};
  std::size_t size = 0;
};

/// Nodes of the lattice simplex with spacing 1/n.
///
/// Nodes are addressed through cumulative coordinates s_k = n (x_1 + ... + x_k),
/// k < d; in those coordinates the node set is the integer points of
/// 0 <= s_1 <= ... <= s_{d-1} <= n, a union of Kuhn simplices.
class SimplexGrid {
 public:
  SimplexGrid(std::size_t d, int n, std::size_t cap = kDefaultLatticeCap) : d_(d), n_(n) {
    if (n < 2) throw Error("simplex grid resolution must be at least 2");
    const auto states = enumerate_lattice(d, n, cap);
    std::uint64_t dense = 1;
    for (std::size_t k = 0; k + 1 < d; ++k) dense *= static_cast<std::uint64_t>(n + 1);
    if (dense > 64'000'000) throw Error("simplex grid lookup table too large");
    lookup_.assign(dense, -1);
    nodes_.reserve(states.size());
    for (std::size_t id = 0; id < states.size(); ++id) {
      nodes_.push_back(states[id].point());
      std::array<int, kMaxTypes> s{};
      int acc = 0;
      for (std::size_t k = 0; k + 1 < d; ++k) {
        acc += states[id].count(k);
        s[k] = acc;
      }
      lookup_[address(s)] = static_cast<std::int64_t>(id);
    }
  }

  std::size_t dimension() const { return d_; }
  int resolution() const { return n_; }
  std::size_t size() const { return nodes_.size(); }
  const Coords& node(std::size_t id) const { return nodes_[id]; }

  /// Barycentric stencil of x in its Kuhn simplex. Zero-weight vertices are dropped.
  Stencil locate(const Coords& x) const {
    const std::size_t m = d_ - 1;
    std::array<double, kMaxTypes> s{}, r{};
    std::array<int, kMaxTypes> f{};
    double acc = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      acc += x[k];
      s[k] = std::clamp(acc * n_, 0.0, static_cast<double>(n_));
      f[k] = std::min(static_cast<int>(std::floor(s[k])), n_ - 1);
      r[k] = s[k] - f[k];
    }
    // Descending fractional parts; ties put the larger index first so every
    // vertex on the walk keeps s monotone.
    std::array<std::size_t, kMaxTypes> order{};
    std::iota(order.begin(), order.begin() + m, 0);
    std::sort(order.begin(), order.begin() + m, [&](std::size_t a, std::size_t b) {
      return r[a] != r[b] ? r[a] > r[b] : a > b;
    });

    Stencil st;
    std::array<int, kMaxTypes> v = f;
    double prev = 1.0;
    for (std::size_t step = 0; step <= m; ++step) {
      const double next = step < m ? r[order[step]] : 0.0;
      const double w = prev - next;
      if (w > 0.0) {
        const std::int64_t id = lookup_[address(v)];
        if (id < 0) throw Error("interpolation vertex outside the simplex grid");
        st.node[st.size] = static_cast<std::size_t>(id);
        st.weight[st.size] = w;
        ++st.size;
      }
      if (step < m) ++v[order[step]];
      prev = next;
    }
    return st;
  }

 private:
  std::size_t address(const std::array<int, kMaxTypes>& s) const {
    std::size_t a = 0;
    for (std::size_t k = d_ - 1; k-- > 0;) a = a * static_cast<std::size_t>(n_ + 1) + s[k];
    return a;
  }

  std::size_t d_;
  int n_;
  std::vector<Coords> nodes_;
  std::vector<std::int64_t> lookup_;
};

inline SimplexGrid build_simplex_grid(std::size_t d, int n, std::size_t cap = kDefaultLatticeCap) {
  return SimplexGrid(d, n, cap);
}

/// Tabulated W(t_k, node) on a uniform time grid t_0 < ... < t_{n_t} = T,
/// piecewise linear in time and barycentric in space.
class ValueField {
 public:
  ValueField(std::shared_ptr<const SimplexGrid> grid, double start, double horizon,
             std::size_t time_steps, std::vector<double> table, std::string model_name = {})
      : grid_(std::move(grid)),
        start_(start),
        horizon_(horizon),
        steps_(time_steps),
        table_(std::move(table)),
        model_name_(std::move(model_name)) {
    if (!grid_) throw Error("value field needs a grid");
    if (steps_ < 1) throw Error("value field needs at least one time step");
    if (!(horizon_ > start_)) throw Error("value field horizon must exceed its start time");
    if (table_.size() != (steps_ + 1) * grid_->size()) throw Error("value table size mismatch");
  }

  /// Tabulates f(t_k, node) at every slice and node.
  static ValueField from_function(std::shared_ptr<const SimplexGrid> grid, double start,
                                  double horizon, std::size_t time_steps,
                                  const std::function<double(double, const Coords&)>& f,
                                  std::string model_name = {}) {
    std::vector<double> table((time_steps + 1) * grid->size());
    const double dt = (horizon - start) / static_cast<double>(time_steps);
    for (std::size_t k = 0; k <= time_steps; ++k) {
      const double t = k == time_steps ? horizon : start + k * dt;
      for (std::size_t id = 0; id < grid->size(); ++id) table[k * grid->size() + id] = f(t, grid->node(id));
    }
    return ValueField(std::move(grid), start, horizon, time_steps, std::move(table),
                      std::move(model_name));
  }

  const SimplexGrid& grid() const { return *grid_; }
  const std::shared_ptr<const SimplexGrid>& shared_grid() const { return grid_; }
  double start() const { return start_; }
  double horizon() const { return horizon_; }
  std::size_t time_steps() const { return steps_; }
  double time_step() const { return (horizon_ - start_) / static_cast<double>(steps_); }
  double time(std::size_t k) const { return k == steps_ ? horizon_ : start_ + k * time_step(); }
  const std::string& model_name() const { return model_name_; }
  const std::vector<double>& table() const { return table_; }

  double at(std::size_t k, std::size_t node) const { return table_[k * grid_->size() + node]; }

  double min_value() const { return *std::min_element(table_.begin(), table_.end()); }
  double max_value() const { return *std::max_element(table_.begin(), table_.end()); }

  /// Spatial interpolation within slice k.
  double eval_slice(std::size_t k, const Coords& x) const {
    const Stencil st = grid_->locate(x);
    const double* row = table_.data() + k * grid_->size();
    double v = 0.0;
    for (std::size_t i = 0; i < st.size; ++i) v += st.weight[i] * row[st.node[i]];
    return v;
  }

  double eval(double t, const Coords& x) const {
    const double pos = std::clamp((t - start_) / time_step(), 0.0, static_cast<double>(steps_));
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) <= 1e-9) return eval_slice(static_cast<std::size_t>(nearest), x);
    const auto k = std::min(static_cast<std::size_t>(std::floor(pos)), steps_ - 1);
    const double theta = pos - static_cast<double>(k);
    return (1.0 - theta) * eval_slice(k, x) + theta * eval_slice(k + 1, x);
  }

 private:
  std::shared_ptr<const SimplexGrid> grid_;
  double start_;
  double horizon_;
  std::size_t steps_;
  std::vector<double> table_;
  std::string model_name_;
};

inline double eval_value(const ValueField& field, double t, const Coords& x) {
  return field.eval(t, x);
}

struct SolveOptions {
  std::size_t workers = 1;
};

/// W(T, .) = sigma; W(t_k, x) = min_u max_v W(t_{k+1}, P(x + dt x Q(t_k, x, u, v)))
/// with P the clip-and-renormalize projection onto the simplex.
inline ValueField solve_value(const RateModel& model, std::size_t time_steps,
                              std::shared_ptr<const SimplexGrid> grid,
                              const SolveOptions& options = {}) {
  if (grid->dimension() != model.dimension()) throw Error("grid and model dimensions differ");
  if (time_steps < 1) throw Error("value solve needs at least one time step");
  const std::size_t N = grid->size();
  const std::size_t nu = model.u_grid().size();
  const std::size_t nv = model.v_grid().size();
  const double T = model.horizon();
  const double dt = T / static_cast<double>(time_steps);
  const double sqrt_d = std::sqrt(static_cast<double>(model.dimension()));

  std::vector<double> table((time_steps + 1) * N);
  for (std::size_t id = 0; id < N; ++id) table[time_steps * N + id] = model.payoff(grid->node(id));

  std::vector<double> slice_rate(N);
  for (std::size_t k = time_steps; k-- > 0;) {
    const double t = k * dt;
    const double* next = table.data() + (k + 1) * N;
    parallel_for(N, options.workers, [&](std::size_t id) {
      const Coords& x = grid->node(id);
      double best = std::numeric_limits<double>::infinity();
      double rate = 0.0;
      for (ControlId u = 0; u < nu; ++u) {
        double worst = -std::numeric_limits<double>::infinity();
        for (ControlId v = 0; v < nv; ++v) {
          const RateMatrix q = model.rates(t, x, u, v);
          for (std::size_t i = 0; i < q.size(); ++i) {
            for (std::size_t j = 0; j < q.size(); ++j) rate = std::max(rate, std::abs(q(i, j)));
          }
          const Coords f = drift(model, t, x, u, v);
          const Projection p = SimplexPoint::project(axpy(x, dt, f));
          if (p.displacement > SimplexPoint::kMaxDisplacement) {
            throw Error("value solve: characteristic step left the simplex (displacement " +
                        std::to_string(p.displacement) + ") at t=" + std::to_string(t));
          }
          const Stencil st = grid->locate(p.point.coords());
          double w = 0.0;
          for (std::size_t s = 0; s < st.size; ++s) w += st.weight[s] * next[st.node[s]];
          worst = std::max(worst, w);
        }
        best = std::min(best, worst);
      }
      table[k * N + id] = best;
      slice_rate[id] = rate;
    });
    const double K = *std::max_element(slice_rate.begin(), slice_rate.end());
    if (dt * K * sqrt_d > 1.0) {
      throw Error("value solve: time step " + std::to_string(dt) + " too large for rate bound " +
                  std::to_string(K) + " (need dt K sqrt(d) <= 1)");
    }
  }
  return ValueField(std::move(grid), 0.0, T, time_steps, std::move(table), model.name());
}

/// Slack granted to a numerical value field when it stands in for an exact
/// super- or subsolution: c (1/n_x + T/n_t), with c = 5 K sqrt(d) by default.
inline double monotonicity_tolerance(const ValueField& field, double rate_bound,
                                     double coefficient = 0.0) {
  const double d = static_cast<double>(field.grid().dimension());
  const double c = coefficient > 0.0 ? coefficient : 5.0 * rate_bound * std::sqrt(d);
  return c * (1.0 / field.grid().resolution() +
              (field.horizon() - field.start()) / static_cast<double>(field.time_steps()));
}

struct SupersolutionCheck {
  std::size_t samples = 500;
  double step = 0.01;
  double coefficient = 0.0;  // c_mono; zero selects the default
  std::size_t lambda_points = 9;
  std::uint64_t seed = 1;
};

struct SupersolutionReport {
  std::size_t checks = 0;
  std::size_t violations = 0;
  /// Largest over checks of (best achievable change in W) minus the allowed slack.
  double worst_slack = -std::numeric_limits<double>::infinity();
  double tolerance = 0.0;  // eps_mono
};

namespace detail {

inline SupersolutionReport verify_monotone(const ValueField& field, const RateModel& model,
                                           double rate_bound, const SupersolutionCheck& spec,
                                           Player side) {
  SupersolutionReport report;
  report.tolerance = monotonicity_tolerance(field, rate_bound, spec.coefficient);
  const double span = field.horizon() - field.start();
  const double allowed = report.tolerance * spec.step / span;
  const std::size_t own = side == Player::kFirst ? model.u_grid().size() : model.v_grid().size();
  const std::size_t other = side == Player::kFirst ? model.v_grid().size() : model.u_grid().size();
  const auto candidates = hull_candidates(own, spec.lambda_points);
  for (std::size_t k = 0; k < spec.samples; ++k) {
    RandomStream rng(spec.seed, StreamTag::kSupersolution, k);
    const double t = field.start() + rng.uniform() * (span - spec.step);
    const Coords x = sample_simplex(model.dimension(), rng);
    const double here = field.eval(t, x);
    for (ControlId fixed = 0; fixed < other; ++fixed) {
      double best = side == Player::kFirst ? std::numeric_limits<double>::infinity()
                                           : -std::numeric_limits<double>::infinity();
      for (const ControlMix& mix : candidates) {
        const Coords f = mixed_drift(model, t, x, side, mix, fixed);
        const Coords y = SimplexPoint::project(axpy(x, spec.step, f)).point.coords();
        const double there = field.eval(t + spec.step, y);
        best = side == Player::kFirst ? std::min(best, there) : std::max(best, there);
      }
      // Positive excess means W must rise (first player) or fall (second).
      const double excess = side == Player::kFirst ? best - here : here - best;
      ++report.checks;
      report.worst_slack = std::max(report.worst_slack, excess - allowed);
      if (excess > allowed) ++report.violations;
    }
  }
  return report;
}

}  // namespace detail

/// For sampled (t, x) and every opponent control v, checks that some control
/// in the first player's relaxed grid keeps W from increasing over one step
/// by more than eps_mono * step / T.
inline SupersolutionReport verify_supersolution(const ValueField& field, const RateModel& model,
                                                double rate_bound, const SupersolutionCheck& spec) {
  return detail::verify_monotone(field, model, rate_bound, spec, Player::kFirst);
}

/// Mirror image for the second player: W must not decrease beyond the slack.
inline SupersolutionReport verify_subsolution(const ValueField& field, const RateModel& model,
                                              double rate_bound, const SupersolutionCheck& spec) {
  return detail::verify_monotone(field, model, rate_bound, spec, Player::kSecond);
}

}  // namespace xshift
