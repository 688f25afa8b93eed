#pragma once

// Controlled Kolmogorov rate matrices Q(t, x, u, v) and the structural checks
// that the game machinery relies on.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xshift/rng.hpp"
#include "xshift/simplex.hpp"

namespace xshift {

/// Index into a player's control grid.
using ControlId = std::size_t;

/// Finite, ordered set of control values for one player.
class ControlGrid {
 public:
  ControlGrid() = default;
  explicit ControlGrid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.empty()) throw Error("control grid must be non-empty");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      for (std::size_t j = i + 1; j < points_.size(); ++j) {
        if (points_[i] == points_[j]) throw Error("control grid points must be distinct");
      }
    }
  }
  ControlGrid(std::initializer_list<double> p) : ControlGrid(std::vector<double>(p)) {}

  /// n equally spaced points on [lo, hi].
  static ControlGrid uniform(double lo, double hi, std::size_t n) {
    if (n == 1) return ControlGrid({lo});
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return ControlGrid(std::move(p));
  }

  std::size_t size() const { return points_.size(); }
  double operator[](ControlId i) const { return points_[i]; }
  const std::vector<double>& points() const { return points_; }

  std::optional<ControlId> find(double value, double tol = 1e-12) const {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (std::abs(points_[i] - value) <= tol) return i;
    }
    return std::nullopt;
  }

 private:
  std::vector<double> points_;
};

/// Dense d x d matrix with fixed capacity.
class RateMatrix {
 public:
  RateMatrix() = default;
  explicit RateMatrix(std::size_t d) : d_(d) {
    if (d > kMaxTypes) throw Error("rate matrix dimension exceeds capacity");
  }
  std::size_t size() const { return d_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * kMaxTypes + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * kMaxTypes + j]; }

  /// Sets each diagonal entry to minus the sum of its row's off-diagonals.
  void fill_diagonal() {
    for (std::size_t i = 0; i < d_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d_; ++j) {
        if (j != i) s += (*this)(i, j);
      }
      (*this)(i, i) = -s;
    }
  }

 private:
  std::array<double, kMaxTypes * kMaxTypes> a_{};
  std::size_t d_ = 0;
};

/// Constants a model may declare exactly; declared values win over sampled ones.
struct DeclaredConstants {
  std::optional<double> rate_bound{};        // K
  std::optional<double> drift_lipschitz{};   // L
  std::optional<double> payoff_lipschitz{};  // R
};

/// The controlled Kolmogorov matrix with horizon, control grids and terminal
/// payoff. Player one minimizes the expected payoff, player two maximizes it.
class RateModel {
 public:
  using Evaluator = std::function<RateMatrix(double t, const Coords& x, double u, double v)>;
  using Payoff = std::function<double(const Coords& x)>;

  RateModel(std::string name, std::size_t dimension, double horizon, ControlGrid u_grid,
            ControlGrid v_grid, Evaluator rates, Payoff payoff, DeclaredConstants declared = {})
      : name_(std::move(name)),
        d_(dimension),
        horizon_(horizon),
        u_grid_(std::move(u_grid)),
        v_grid_(std::move(v_grid)),
        rates_(std::move(rates)),
        payoff_(std::move(payoff)),
        declared_(declared) {
    if (d_ < 2 || d_ > kMaxTypes) throw Error("model dimension must be in [2, kMaxTypes]");
    if (!(horizon_ > 0.0)) throw Error("model horizon must be positive");
    if (u_grid_.size() == 0 || v_grid_.size() == 0) throw Error("control grids must be non-empty");
  }

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return d_; }
  double horizon() const { return horizon_; }
  const ControlGrid& u_grid() const { return u_grid_; }
  const ControlGrid& v_grid() const { return v_grid_; }
  const DeclaredConstants& declared() const { return declared_; }

  RateMatrix rates(double t, const Coords& x, ControlId u, ControlId v) const {
    return rates_(t, x, u_grid_[u], v_grid_[v]);
  }

  double payoff(const Coords& x) const { return payoff_(x); }

 private:
  std::string name_;
  std::size_t d_;
  double horizon_;
  ControlGrid u_grid_;
  ControlGrid v_grid_;
  Evaluator rates_;
  Payoff payoff_;
  DeclaredConstants declared_;
};

/// Row vector times matrix: the mean-field drift x Q(t, x, u, v).
inline Coords drift(const RateModel& model, double t, const Coords& x, ControlId u, ControlId v) {
  const RateMatrix q = model.rates(t, x, u, v);
  const std::size_t d = model.dimension();
  Coords out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) out[j] += xi * q(i, j);
  }
  return out;
}

/// Table of <xi, x Q(t, x, u, v)> over both control grids, row-major in u.
class PayoffTable {
 public:
  PayoffTable(const RateModel& model, double t, const Coords& x, const Coords& xi)
      : nu_(model.u_grid().size()), nv_(model.v_grid().size()), a_(nu_ * nv_) {
    for (ControlId u = 0; u < nu_; ++u) {
      for (ControlId v = 0; v < nv_; ++v) a_[u * nv_ + v] = dot(xi, drift(model, t, x, u, v));
    }
  }

  double operator()(ControlId u, ControlId v) const { return a_[u * nv_ + v]; }
  std::size_t rows() const { return nu_; }
  std::size_t cols() const { return nv_; }

  /// Row player minimizes the worst column: (argmin_u max_v, value).
  std::pair<ControlId, double> min_max() const {
    ControlId best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (ControlId u = 0; u < nu_; ++u) {
      double worst = -std::numeric_limits<double>::infinity();
      for (ControlId v = 0; v < nv_; ++v) worst = std::max(worst, (*this)(u, v));
      if (worst < best_value) {
        best_value = worst;
        best = u;
      }
    }
    return {best, best_value};
  }

  /// Column player maximizes the worst row: (argmax_v min_u, value).
  std::pair<ControlId, double> max_min() const {
    ControlId best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (ControlId v = 0; v < nv_; ++v) {
      double worst = std::numeric_limits<double>::infinity();
      for (ControlId u = 0; u < nu_; ++u) worst = std::min(worst, (*this)(u, v));
      if (worst > best_value) {
        best_value = worst;
        best = v;
      }
    }
    return {best, best_value};
  }

  /// Column player minimizes the worst row: (argmin_v max_u, value).
  std::pair<ControlId, double> col_min_max() const {
    ControlId best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (ControlId v = 0; v < nv_; ++v) {
      double worst = -std::numeric_limits<double>::infinity();
      for (ControlId u = 0; u < nu_; ++u) worst = std::max(worst, (*this)(u, v));
      if (worst < best_value) {
        best_value = worst;
        best = v;
      }
    }
    return {best, best_value};
  }

  /// Row player maximizes the worst column: (argmax_u min_v, value).
  std::pair<ControlId, double> row_max_min() const {
    ControlId best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (ControlId u = 0; u < nu_; ++u) {
      double worst = std::numeric_limits<double>::infinity();
      for (ControlId v = 0; v < nv_; ++v) worst = std::min(worst, (*this)(u, v));
      if (worst > best_value) {
        best_value = worst;
        best = u;
      }
    }
    return {best, best_value};
  }

 private:
  std::size_t nu_, nv_;
  std::vector<double> a_;
};

/// H(t, x, xi) = min_u max_v <xi, x Q(t, x, u, v)>.
inline double hamiltonian(const RateModel& model, double t, const Coords& x, const Coords& xi) {
  return PayoffTable(model, t, x, xi).min_max().second;
}

/// min_u max_v - max_v min_u of <xi, x Q>; zero when the grid game has a saddle point.
inline double isaacs_gap(const RateModel& model, double t, const Coords& x, const Coords& xi) {
  const PayoffTable table(model, t, x, xi);
  return table.min_max().second - table.max_min().second;
}

/// Uniform sample on the simplex (flat Dirichlet), with occasional faces and
/// vertices so boundary behaviour is exercised.
inline Coords sample_simplex(std::size_t d, RandomStream& rng) {
  Coords x(d, 0.0);
  const double mode = rng.uniform();
  if (mode < 0.05) {
    x[rng.below(d)] = 1.0;
    return x;
  }
  const std::size_t zeroed = mode < 0.15 ? rng.below(d) : d;
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    x[i] = i == zeroed ? 0.0 : -std::log1p(-rng.uniform());
    s += x[i];
  }
  if (s <= 0.0) {
    x[0] = 1.0;
    return x;
  }
  for (auto& v : x) v /= s;
  return x;
}

/// One (t, x, u, v) evaluation point.
struct ModelSample {
  double t = 0.0;
  Coords x;
  ControlId u = 0;
  ControlId v = 0;

  std::string describe(const RateModel& model) const {
    std::string s = "t=" + std::to_string(t) + " x=(";
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(x[i]);
    }
    s += ") u=" + std::to_string(model.u_grid()[u]) + " v=" + std::to_string(model.v_grid()[v]);
    return s;
  }
};

inline ModelSample draw_model_sample(const RateModel& model, RandomStream& rng) {
  ModelSample s;
  s.t = rng.uniform() * model.horizon();
  s.x = sample_simplex(model.dimension(), rng);
  s.u = rng.below(model.u_grid().size());
  s.v = rng.below(model.v_grid().size());
  return s;
}

struct ValidationReport {
  std::size_t samples = 0;
  double max_row_sum_deviation = 0.0;
  double min_off_diagonal = std::numeric_limits<double>::infinity();
  bool passed = true;
  std::string failure;                 // empty when passed
  std::optional<ModelSample> offending;
};

/// Checks the Kolmogorov conditions (nonnegative off-diagonals, zero row
/// sums within 1e-12) at `samples` random (t, x, u, v) tuples.
inline ValidationReport validate_rate_model(const RateModel& model, std::size_t samples,
                                            std::uint64_t seed) {
  constexpr double kRowSumTolerance = 1e-12;
  ValidationReport report;
  const std::size_t d = model.dimension();
  for (std::size_t k = 0; k < samples; ++k) {
    RandomStream rng(seed, StreamTag::kValidation, k);
    const ModelSample s = draw_model_sample(model, rng);
    RateMatrix q;
    try {
      q = model.rates(s.t, s.x, s.u, s.v);
    } catch (const std::exception& e) {
      report.passed = false;
      report.failure = std::string("evaluation failed: ") + e.what() + " at " + s.describe(model);
      report.offending = s;
      return report;
    }
    ++report.samples;
    for (std::size_t i = 0; i < d; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        row += q(i, j);
        if (j != i) report.min_off_diagonal = std::min(report.min_off_diagonal, q(i, j));
        if (j != i && report.passed && !(q(i, j) >= 0.0)) {
          report.passed = false;
          report.failure = "negative off-diagonal Q(" + std::to_string(i) + "," +
                           std::to_string(j) + ")=" + std::to_string(q(i, j)) + " at " +
                           s.describe(model);
          report.offending = s;
        }
      }
      report.max_row_sum_deviation = std::max(report.max_row_sum_deviation, std::abs(row));
      if (report.passed && !(std::abs(row) <= kRowSumTolerance)) {
        report.passed = false;
        report.failure = "row " + std::to_string(i) + " sums to " + std::to_string(row) + " at " +
                         s.describe(model);
        report.offending = s;
      }
    }
  }
  return report;
}

/// A sampled or declared constant together with where it was attained.
struct ConstantEstimate {
  double value = 0.0;
  double sampled = 0.0;
  bool declared = false;
  std::string witness;
};

struct ModelConstants {
  ConstantEstimate rate_bound;        // K = sup |Q_ij|
  ConstantEstimate drift_lipschitz;   // L for y -> y Q(t, y, u, v)
  ConstantEstimate payoff_lipschitz;  // R for the terminal payoff
  /// Sampled modulus of continuity in t: (delta, gamma(delta)), nondecreasing,
  /// first entry (0, 0).
  std::vector<std::pair<double, double>> gamma_table{{0.0, 0.0}};

  double K() const { return rate_bound.value; }
  double L() const { return drift_lipschitz.value; }
  double R() const { return payoff_lipschitz.value; }

  /// Piecewise-linear reading of the modulus; linear extrapolation past the
  /// last tabulated spacing.
  double gamma(double delta) const {
    if (delta <= 0.0 || gamma_table.size() < 2) return 0.0;
    for (std::size_t k = 1; k < gamma_table.size(); ++k) {
      const auto [d1, g1] = gamma_table[k];
      if (delta <= d1) {
        const auto [d0, g0] = gamma_table[k - 1];
        return g0 + (g1 - g0) * (delta - d0) / (d1 - d0);
      }
    }
    const auto [dl, gl] = gamma_table.back();
    return gl * delta / dl;
  }
};

struct ConstantSampling {
  std::size_t samples = 20000;
  /// Spacing of the nearby pairs used for the Lipschitz quotients.
  double spacing = 1e-3;
  std::vector<double> gamma_deltas{0.001, 0.005, 0.01, 0.02, 0.05, 0.1};
};

/// Estimates K, L, R and the time modulus by sampling. Model-declared values
/// replace the sampled ones in `value`; the sampled number is kept alongside.
inline ModelConstants estimate_constants(const RateModel& model, const ConstantSampling& spec,
                                         std::uint64_t seed) {
  ModelConstants c;
  const std::size_t d = model.dimension();
  const double T = model.horizon();
  std::vector<double> gamma(spec.gamma_deltas.size(), 0.0);

  auto nearby = [&](const Coords& x, RandomStream& rng) {
    // Random tangent direction (sums to zero), scaled to the spacing, then
    // pulled back inside the simplex.
    Coords dir(d, 0.0);
    for (auto& v : dir) v = rng.uniform() - 0.5;
    const double mean = dir.sum() / static_cast<double>(d);
    for (auto& v : dir) v -= mean;
    const double n = norm(dir);
    Coords y = n > 0.0 ? axpy(x, spec.spacing / n, dir) : x;
    return SimplexPoint::project(y).point.coords();
  };

  for (std::size_t k = 0; k < spec.samples; ++k) {
    RandomStream rng(seed, StreamTag::kConstants, k);
    const ModelSample s = draw_model_sample(model, rng);
    const RateMatrix q = model.rates(s.t, s.x, s.u, s.v);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (std::abs(q(i, j)) > c.rate_bound.sampled) {
          c.rate_bound.sampled = std::abs(q(i, j));
          c.rate_bound.witness = s.describe(model) + " i=" + std::to_string(i) + " j=" +
                                 std::to_string(j);
        }
      }
    }

    // Lipschitz quotients: a nearby pair and an independent far pair.
    for (int pass = 0; pass < 2; ++pass) {
      const Coords y = pass == 0 ? nearby(s.x, rng) : sample_simplex(d, rng);
      const double dx = distance(y, s.x);
      if (dx <= 1e-14) continue;
      const Coords fx = drift(model, s.t, s.x, s.u, s.v);
      const Coords fy = drift(model, s.t, y, s.u, s.v);
      const double lq = distance(fx, fy) / dx;
      if (lq > c.drift_lipschitz.sampled) {
        c.drift_lipschitz.sampled = lq;
        c.drift_lipschitz.witness = s.describe(model);
      }
      const double rq = std::abs(model.payoff(s.x) - model.payoff(y)) / dx;
      if (rq > c.payoff_lipschitz.sampled) {
        c.payoff_lipschitz.sampled = rq;
        c.payoff_lipschitz.witness = s.describe(model);
      }
    }

    for (std::size_t g = 0; g < spec.gamma_deltas.size(); ++g) {
      const double delta = spec.gamma_deltas[g];
      if (delta >= T) continue;
      const double t0 = rng.uniform() * (T - delta);
      const RateMatrix a = model.rates(t0, s.x, s.u, s.v);
      const RateMatrix b = model.rates(t0 + delta, s.x, s.u, s.v);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) gamma[g] = std::max(gamma[g], std::abs(a(i, j) - b(i, j)));
      }
    }
  }

  auto settle = [](ConstantEstimate& e, const std::optional<double>& declared) {
    e.value = e.sampled;
    if (declared) {
      e.value = *declared;
      e.declared = true;
    }
  };
  settle(c.rate_bound, model.declared().rate_bound);
  settle(c.drift_lipschitz, model.declared().drift_lipschitz);
  settle(c.payoff_lipschitz, model.declared().payoff_lipschitz);

  double running = 0.0;
  for (std::size_t g = 0; g < spec.gamma_deltas.size(); ++g) {
    if (spec.gamma_deltas[g] >= T) break;
    running = std::max(running, gamma[g]);
    c.gamma_table.emplace_back(spec.gamma_deltas[g], running);
  }
  return c;
}

/// Convex combination lambda * a + (1 - lambda) * b of two grid controls,
/// applied at the level of the drift. lambda = 1 is the plain control a.
struct ControlMix {
  ControlId a = 0;
  ControlId b = 0;
  double lambda = 1.0;

  static ControlMix pure(ControlId c) { return {c, c, 1.0}; }
  bool is_pure() const { return lambda == 1.0 || a == b; }
};

/// Which player's control is relaxed to a convex combination.
enum class Player { kFirst, kSecond };

/// Drift with one player's control mixed and the other's fixed.
inline Coords mixed_drift(const RateModel& model, double t, const Coords& x, Player mixed,
                          const ControlMix& mix, ControlId fixed) {
  auto at = [&](ControlId c) {
    return mixed == Player::kFirst ? drift(model, t, x, c, fixed) : drift(model, t, x, fixed, c);
  };
  if (mix.is_pure()) return at(mix.a);
  return axpy(mix.lambda * at(mix.a), 1.0 - mix.lambda, at(mix.b));
}

/// Pure grid controls in grid order, then interior convex combinations of
/// adjacent grid points on a lambda grid with `lambda_points` points over [0, 1].
inline std::vector<ControlMix> hull_candidates(std::size_t grid_size, std::size_t lambda_points) {
  std::vector<ControlMix> out;
  for (ControlId c = 0; c < grid_size; ++c) out.push_back(ControlMix::pure(c));
  if (lambda_points < 3) return out;
  for (ControlId c = 0; c + 1 < grid_size; ++c) {
    for (std::size_t k = 1; k + 1 < lambda_points; ++k) {
      const double lambda = static_cast<double>(k) / static_cast<double>(lambda_points - 1);
      out.push_back({c, c + 1, lambda});
    }
  }
  return out;
}

}  // namespace xshift
