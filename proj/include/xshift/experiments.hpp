#pragma once

// Monte Carlo and oracle experiments driven by a Scenario. Every function
// returns a ResultTable with pass/fail checks; trials use per-trial random
// streams and fixed-shape reductions, so results do not depend on `workers`.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "xshift/ctmc.hpp"
#include "xshift/field_io.hpp"
#include "xshift/guide.hpp"
#include "xshift/lattice.hpp"
#include "xshift/master_equation.hpp"
#include "xshift/results.hpp"
#include "xshift/scenario.hpp"
#include "xshift/stats.hpp"
#include "xshift/strategy.hpp"
#include "xshift/value.hpp"

namespace xshift {

struct ExperimentSetup {
  Scenario scenario;
  RateModel model;
  ModelConstants constants;
  std::shared_ptr<const ValueField> field;
  GuideOptions guide;

  double K() const { return constants.K(); }
  /// D = C T with C = 2 d^2 K.
  double D() const {
    const double d = static_cast<double>(model.dimension());
    return 2.0 * d * d * K() * model.horizon();
  }
};

/// Builds the model, its constants and (unless `with_field` is false) the
/// value field, loading it from the scenario's cache file when one is named.
inline ExperimentSetup prepare(const Scenario& s, std::size_t workers, bool with_field = true) {
  validate(s);
  ExperimentSetup e{s, s.make_model(), {}, nullptr, {}};
  e.constants = estimate_constants(e.model, ConstantSampling{}, s.seed);
  if (with_field) {
    if (s.value_field) {
      auto f = std::make_shared<const ValueField>(load_field(*s.value_field));
      if (f->model_name() != e.model.name() || f->grid().dimension() != e.model.dimension() ||
          std::abs(f->horizon() - e.model.horizon()) > 1e-12) {
        throw Error("cached value field '" + *s.value_field + "' does not match model '" + e.model.name() + "'");
      }
      e.field = std::move(f);
    } else {
      auto grid = std::make_shared<const SimplexGrid>(
          build_simplex_grid(e.model.dimension(), static_cast<int>(s.space_steps)));
      e.field = std::make_shared<const ValueField>(
          solve_value(e.model, s.time_steps, std::move(grid), SolveOptions{workers}));
    }
    e.guide.lambda_points = s.lambda_points;
    e.guide.tolerance = monotonicity_tolerance(*e.field, e.K(), s.mono_coefficient);
  }
  return e;
}

inline std::uint64_t trial_index(std::uint64_t config, std::uint64_t trial) { return (config << 32) | trial; }

inline std::string coords_string(const Coords& x) {
  std::string s = "(";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) s += ";";
    s += format_double(x[i]);
  }
  return s + ")";
}

inline ResultTable base_table(const std::string& kind, const ExperimentSetup& e) {
  ResultTable t;
  t.kind = kind;
  t.scenario = scenario_to_json(e.scenario);
  t.scenario.erase("output");
  t.constants = constants_to_json(e.constants);
  t.constants["D"] = e.D();
  if (e.field) t.constants["eps_mono"] = e.guide.tolerance;
  return t;
}

// ---------------------------------------------------------------------------
// Near-optimality bounds for the extremal-shift strategies

inline const std::vector<std::string>& bound_columns() {
  static const std::vector<std::string> cols{
      "player", "adversary", "particles", "h", "steps", "diameter", "trials", "mean", "sem", "value",
      "K", "L", "R", "D", "bound", "mean_ok", "threshold", "exceed_count", "exceed_prob", "ci_half_width",
      "exceed_limit", "exceed_status", "guide_updates", "guide_violations", "violation_fraction"};
  return cols;
}

namespace detail {

/// Runs every (M, m, adversary) configuration with `side` playing the
/// extremal shift. Returns the table without the aggregate checks.
inline ResultTable run_bounds(const ExperimentSetup& e, Player side, const std::string& kind,
                              std::size_t workers) {
  const Scenario& s = e.scenario;
  const RateModel& model = e.model;
  const ValueField& field = *e.field;
  const Player other = side == Player::kFirst ? Player::kSecond : Player::kFirst;
  const SimplexPoint y = initial_point(s);
  const double T = model.horizon();
  const double R = e.constants.R();
  const double D = e.D();

  ResultTable table = base_table(kind, e);
  table.columns = bound_columns();
  std::size_t all_updates = 0, all_violations = 0;

  std::uint64_t config = 0;
  for (int M : s.particles) {
    const LatticeState y_lat = round_to_lattice(y, M);
    const double h = y_lat.spacing();
    const double value = field.eval(s.start_time, y_lat.point());
    for (std::size_t m : s.steps) {
      const Partition partition = Partition::uniform(s.start_time, T, m);
      for (const std::string& adversary : s.adversaries) {
        const PlayerSpec own = ControlWithGuideStrategy(side, field, model, e.guide);
        const PlayerSpec opp = make_player(adversary, other, model, field, e.guide);
        const PlayerSpec& first = side == Player::kFirst ? own : opp;
        const PlayerSpec& second = side == Player::kFirst ? opp : own;

        std::vector<double> payoff(s.trials);
        std::vector<std::size_t> updates(s.trials), violations(s.trials);
        parallel_for(s.trials, workers, [&](std::size_t k) {
          RandomStream rng(s.seed, StreamTag::kChain, trial_index(config, k));
          const TrajectoryRecord rec = run_episode(model, e.K(), y_lat, partition, first, second, rng);
          payoff[k] = rec.payoff;
          updates[k] = rec.guide_updates;
          violations[k] = rec.guide_violations;
        }, 4);
        ++config;

        const SampleSummary stat = summarize(payoff);
        const double root = std::sqrt(D * h);
        const double cube = std::cbrt(D * h);
        const double sign = side == Player::kFirst ? 1.0 : -1.0;
        const double bound = value + sign * R * root;
        const double threshold = value + sign * R * cube;
        bool mean_ok = side == Player::kFirst ? stat.mean <= bound + 2.0 * stat.sem
                                              : stat.mean >= bound - 2.0 * stat.sem;
        // With both sides extremal, both one-sided bounds apply.
        if (side == Player::kSecond && adversary == "extremal") {
          mean_ok = mean_ok && stat.mean <= value + R * root + 2.0 * stat.sem;
        }
        std::size_t exceed = 0;
        for (double p : payoff) exceed += side == Player::kFirst ? p >= threshold : p <= threshold;
        const double prob = static_cast<double>(exceed) / static_cast<double>(s.trials);
        const double half = wilson_interval(exceed, s.trials).half_width();
        std::string status;
        if (D * h == 0.0) {
          status = "degenerate";
        } else if (cube >= 1.0) {
          status = "vacuous";
        } else {
          status = prob <= cube + half ? "ok" : "fail";
        }
        std::size_t upd = 0, vio = 0;
        for (std::size_t k = 0; k < s.trials; ++k) upd += updates[k], vio += violations[k];
        all_updates += upd;
        all_violations += vio;

        table.add_row({side == Player::kFirst ? "first" : "second", adversary, M, h, m,
                       partition.diameter(), s.trials, stat.mean, stat.sem, value, e.K(),
                       e.constants.L(), R, D, bound, mean_ok, threshold, exceed, prob, half, cube,
                       status, upd, vio, upd ? static_cast<double>(vio) / upd : 0.0});
      }
    }
  }

  bool means = true, exceedances = true;
  std::size_t idx_mean = 15, idx_status = 21;
  for (const auto& r : table.rows) {
    means = means && r[idx_mean].get<bool>();
    exceedances = exceedances && r[idx_status].get<std::string>() != "fail";
  }
  const double fraction = all_updates ? static_cast<double>(all_violations) / all_updates : 0.0;
  table.checks.push_back({"mean bound", means,
                          side == Player::kFirst ? "mean <= Val + R sqrt(D h) + 2 SEM in every configuration"
                                                 : "mean >= Val - R sqrt(D h) - 2 SEM in every configuration"});
  table.checks.push_back({"exceedance bound", exceedances,
                          "P(exceed threshold) <= (D h)^(1/3) + CI half-width, or vacuous/degenerate"});
  table.checks.push_back({"guide monotonicity", fraction <= 0.01,
                          "violation fraction " + format_double(fraction) + " (limit 0.01)"});
  table.summary["guide_updates"] = all_updates;
  table.summary["guide_violations"] = all_violations;
  table.summary["violation_fraction"] = fraction;
  return table;
}

}  // namespace detail

/// First player uses the extremal shift against each adversary. Adds a
/// log-log slope check of (mean - Val) against h over the "extremal"
/// adversary rows at the finest partition, when at least two h are present.
inline ResultTable run_theorem1_experiment(const ExperimentSetup& e, std::size_t workers = 1) {
  ResultTable table = detail::run_bounds(e, Player::kFirst, "theorem1", workers);
  const std::size_t finest = *std::max_element(e.scenario.steps.begin(), e.scenario.steps.end());
  std::vector<double> hs, gaps;
  for (const auto& r : table.rows) {
    if (r[1].get<std::string>() != "extremal" || r[4].get<std::size_t>() != finest) continue;
    hs.push_back(r[3].get<double>());
    gaps.push_back(r[7].get<double>() - r[9].get<double>());
  }
  std::vector<double> distinct = hs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  table.summary["slope_h"] = hs;
  table.summary["slope_gap"] = gaps;
  if (distinct.size() >= 2) {
    const bool flat = std::all_of(gaps.begin(), gaps.end(), [](double g) { return std::abs(g) <= 1e-12; });
    const double slope = loglog_slope(hs, gaps);
    table.summary["slope"] = std::isfinite(slope) ? ojson(slope) : ojson(format_double(slope));
    if (flat) {
      table.checks.push_back({"gap slope", true, "mean equals Val in every configuration; nothing to fit"});
    } else {
      const bool ok = std::isfinite(slope) && slope >= 0.3 && slope <= 0.7;
      std::string detail = "log-log slope of (mean - Val) vs h = " + format_double(slope) + " (want [0.3, 0.7])";
      if (!std::isfinite(slope)) detail += "; some gap is not positive";
      table.checks.push_back({"gap slope", ok, detail});
    }
  }
  return table;
}

/// Second player uses the extremal shift against each first-player adversary.
inline ResultTable run_corollary_experiment(const ExperimentSetup& e, std::size_t workers = 1) {
  return detail::run_bounds(e, Player::kSecond, "corollary", workers);
}

// ---------------------------------------------------------------------------
// One-interval transition probabilities against their first-order expansion

inline ResultTable run_lemma1_check(const ExperimentSetup& e) {
  const Scenario& s = e.scenario;
  const RateModel& model = e.model;
  const std::size_t d = model.dimension();
  const LatticeState xi = round_to_lattice(initial_point(s), s.particles.front());
  const double h = xi.spacing();
  const double t = s.start_time;
  const auto u = model.u_grid().find(s.control_u, 1e-9);
  const auto v = model.v_grid().find(s.control_v, 1e-9);
  if (!u || !v) throw Error("lemma controls are not on the model's grids");
  const RateMatrix q = model.rates(t, xi.point(), *u, *v);
  const Coords x = xi.point();
  const double K = e.K();

  ResultTable table = base_table("lemma1", e);
  table.columns = {"delta", "state", "kind", "from", "to", "probability", "predicted", "residual",
                   "ratio", "required_ratio", "limit", "ok"};

  struct Entry {
    LatticeState state;
    std::string kind;
    std::size_t i, j;
  };
  std::vector<Entry> entries{{xi, "stay", 0, 0}};
  for (std::size_t i = 0; i < d; ++i) {
    if (xi.count(i) == 0) continue;
    for (std::size_t j = 0; j < d; ++j) {
      if (j != i) entries.push_back({xi.jumped(i, j), "jump", i, j});
    }
  }

  const auto& deltas = s.deltas;
  for (double delta : deltas) {
    if (t + delta > model.horizon() + 1e-12) throw Error("lemma delta runs past the horizon");
  }
  std::vector<std::vector<double>> residual(deltas.size(), std::vector<double>(entries.size()));
  std::vector<std::vector<double>> prob(deltas.size(), std::vector<double>(entries.size()));
  std::vector<std::vector<double>> pred(deltas.size(), std::vector<double>(entries.size()));
  std::vector<double> multi(deltas.size());
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    const double delta = deltas[k];
    const Distribution p = master_evolve(model, t, t + delta, Distribution::point_mass(xi), *u, *v,
                                         MasterOptions{0.0, K});
    double listed = 0.0;
    for (std::size_t n = 0; n < entries.size(); ++n) {
      const Entry& en = entries[n];
      double predicted = 0.0;
      if (en.kind == "stay") {
        double out = 0.0;
        for (std::size_t i = 0; i < d; ++i) out += x[i] * q(i, i);
        predicted = 1.0 + delta / h * out;
      } else {
        predicted = delta / h * x[en.i] * q(en.i, en.j);
      }
      prob[k][n] = p.weight_of(en.state);
      pred[k][n] = predicted;
      residual[k][n] = std::abs(prob[k][n] - predicted);
      listed += prob[k][n];
    }
    multi[k] = std::max(0.0, 1.0 - listed);
  }

  bool ratios_ok = true, multi_ok = true;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    const double delta = deltas[k];
    for (std::size_t n = 0; n < entries.size(); ++n) {
      const Entry& en = entries[n];
      double ratio = std::numeric_limits<double>::quiet_NaN();
      double required = std::numeric_limits<double>::quiet_NaN();
      bool ok = true;
      if (k + 1 < deltas.size()) {
        required = 0.75 * std::pow(delta / deltas[k + 1], 2.0);
        if (residual[k][n] > 1e-13) {
          ratio = residual[k + 1][n] > 0.0 ? residual[k][n] / residual[k + 1][n]
                                           : std::numeric_limits<double>::infinity();
          ok = ratio >= required;
        }
      }
      if (en.kind == "jump") ratios_ok = ratios_ok && ok;
      table.add_row({delta, en.state.to_string(), en.kind, en.i, en.j, prob[k][n], pred[k][n],
                     residual[k][n], ratio, required, nullptr, ok});
    }
    const double limit = 10.0 * std::pow(delta * static_cast<double>(d - 1) * K / h, 2.0);
    const bool ok = multi[k] <= limit;
    multi_ok = multi_ok && ok;
    table.add_row({delta, "two or more jumps", "multi", nullptr, nullptr, multi[k], 0.0, multi[k],
                   nullptr, nullptr, limit, ok});
  }
  table.checks.push_back({"single-jump residual decay", ratios_ok,
                          "residual(delta)/residual(delta') >= 0.75 (delta/delta')^2 for every single-jump neighbour"});
  table.checks.push_back({"multi-jump mass", multi_ok, "mass two or more jumps away <= 10 (delta (d-1) K / h)^2"});
  table.summary["state"] = xi.to_string();
  table.summary["u"] = model.u_grid()[*u];
  table.summary["v"] = model.v_grid()[*v];
  return table;
}

// ---------------------------------------------------------------------------
// One-step distance between the chain and the first player's guide

struct Lemma2Allowance {
  double alpha = 0.0;
  double rho = 0.0;
  double kappa = 0.0;
};

/// kappa(delta) = 6 d^3 alpha + sqrt(2 d) rho + K^2 d delta, with
/// alpha = 2 K^2 d^2 delta / h + 2 d gamma(delta) / h and
/// rho <= L K sqrt(d) delta + sqrt(d) gamma(delta).
inline Lemma2Allowance lemma2_allowance(const ModelConstants& c, std::size_t dim, double h, double delta) {
  const double d = static_cast<double>(dim);
  const double K = c.K(), L = c.L(), g = c.gamma(delta);
  Lemma2Allowance a;
  a.alpha = 2.0 * K * K * d * d * delta / h + 2.0 * d * g / h;
  a.rho = L * K * std::sqrt(d) * delta + std::sqrt(d) * g;
  a.kappa = 6.0 * d * d * d * a.alpha + std::sqrt(2.0 * d) * a.rho + K * K * d * delta;
  return a;
}

inline ResultTable run_lemma2_check(const ExperimentSetup& e, std::size_t workers = 1) {
  const Scenario& s = e.scenario;
  const RateModel& model = e.model;
  const ValueField& field = *e.field;
  const std::size_t d = model.dimension();
  const int M = s.particles.front();
  const double h = 1.0 / M;
  const double K = e.K();
  const double beta = 2.0 * e.constants.L();
  const double C = 2.0 * static_cast<double>(d * d) * K;
  const double max_delta = *std::max_element(s.deltas.begin(), s.deltas.end());
  if (!(s.start_time + max_delta < model.horizon())) throw Error("lemma deltas do not fit before the horizon");
  const bool enumerable = composition_count(d, M) <= 100000;

  ResultTable table = base_table("lemma2", e);
  table.columns = {"pair", "t", "x", "w", "delta", "adversary", "u", "v", "gap_sq", "mc_mean", "mc_sem",
                   "exact", "rhs", "kappa", "allowance", "ok", "tight_ok"};

  // Pair index `pairs` is an extra coincident start (w* = x*).
  const std::size_t n_pairs = s.pairs + 1;
  const std::size_t n_adv = s.adversaries.size();
  const std::size_t per_pair = s.deltas.size() * n_adv;
  std::vector<std::vector<ojson>> rows(n_pairs * per_pair);

  parallel_for(n_pairs, workers, [&](std::size_t p) {
    RandomStream pick(s.seed, StreamTag::kSamples, p);
    const double t = s.start_time + pick.uniform() * (model.horizon() - max_delta - s.start_time);
    const LatticeState x_lat = round_to_lattice(SimplexPoint(sample_simplex(d, pick)), M);
    const Coords x = x_lat.point();
    const SimplexPoint w = p == s.pairs ? SimplexPoint(x) : SimplexPoint(sample_simplex(d, pick));
    const double gap_sq = dot(x - w.coords(), x - w.coords());
    const ExtremalControls first = extremal_controls(model, t, x, w.coords());
    const ExtremalControls second = second_player_extremal_controls(model, t, x, w.coords());

    for (std::size_t di = 0; di < s.deltas.size(); ++di) {
      const double delta = s.deltas[di];
      const GuideStep g = guide_advance_first(field, model, t, t + delta, w, first.v, e.guide);
      const Coords w_plus = g.state.w.coords();
      const Lemma2Allowance a = lemma2_allowance(e.constants, d, h, delta);
      const double rhs = (1.0 + beta * delta) * gap_sq + C * h * delta;

      for (std::size_t ai = 0; ai < n_adv; ++ai) {
        const std::string& adv = s.adversaries[ai];
        // The second player's extremal shift, aimed at the same guide point.
        const ControlPolicy v_policy =
            adv == "extremal" ? ControlPolicy::constant(second.v, "extremal")
                              : std::get<ControlPolicy>(make_player(adv, Player::kSecond, model, field, e.guide));
        const ControlPolicy u_policy = ControlPolicy::constant(first.u);
        const std::uint64_t config = (p * s.deltas.size() + di) * n_adv + ai;

        std::vector<double> sq(s.trials);
        std::string v_label = adv == "extremal" ? format_double(model.v_grid()[second.v]) : adv;
        for (std::size_t k = 0; k < s.trials; ++k) {
          RandomStream rng(s.seed, StreamTag::kTransition, trial_index(config, k));
          LatticeState state = x_lat;
          advance_chain(model, K, t, t + delta, state, u_policy, v_policy, rng);
          const Coords z = state.point() - w_plus;
          sq[k] = dot(z, z);
        }
        const SampleSummary st = summarize(sq);

        double exact = std::numeric_limits<double>::quiet_NaN();
        if (enumerable && v_policy.kind() != ControlPolicy::Kind::kPerStep) {
          const Distribution law = master_evolve(model, t, t + delta, Distribution::point_mass(x_lat), u_policy,
                                                 v_policy, MasterOptions{0.0, K});
          exact = law.expectation([&](const Coords& z) {
            const Coords r = z - w_plus;
            return dot(r, r);
          });
        }
        const double allow = a.kappa * delta;
        const bool exact_ok = std::isnan(exact) || exact <= rhs + allow;
        const bool ok = st.mean <= rhs + allow + 3.0 * st.sem && exact_ok;
        const bool tight = st.mean <= rhs + 3.0 * st.sem && (std::isnan(exact) || exact <= rhs);
        rows[p * per_pair + di * n_adv + ai] = {
            p == s.pairs ? ojson("coincident") : ojson(p), t, coords_string(x), coords_string(w.coords()),
            delta, adv, model.u_grid()[first.u], v_label, gap_sq, st.mean, st.sem, exact, rhs, a.kappa,
            allow, ok, tight};
      }
    }
  }, 1);

  std::size_t violations = 0, tight_violations = 0;
  for (auto& r : rows) {
    violations += !r[15].get<bool>();
    tight_violations += !r[16].get<bool>();
    table.add_row(std::move(r));
  }
  table.checks.push_back({"one-step inequality", violations == 0,
                          std::to_string(violations) + " violations beyond kappa delta + 3 SEM"});
  table.summary["beta"] = beta;
  table.summary["C"] = C;
  table.summary["h"] = h;
  table.summary["violations"] = violations;
  table.summary["violations_without_kappa"] = tight_violations;
  return table;
}

// ---------------------------------------------------------------------------
// Simulator against the master-equation oracle

inline ResultTable run_oracle_check(const ExperimentSetup& e, std::size_t workers = 1) {
  const Scenario& s = e.scenario;
  const RateModel& model = e.model;
  const LatticeState y = round_to_lattice(initial_point(s), s.particles.front());
  const auto u = model.u_grid().find(s.control_u, 1e-9);
  const auto v = model.v_grid().find(s.control_v, 1e-9);
  if (!u || !v) throw Error("oracle controls are not on the model's grids");
  const double t0 = s.start_time, t1 = model.horizon();
  const MasterOptions opts{0.0, e.K()};
  const Distribution law = master_evolve(model, t0, t1, Distribution::point_mass(y), *u, *v, opts);
  const auto& states = law.states();

  const ControlPolicy pu = ControlPolicy::constant(*u), pv = ControlPolicy::constant(*v);
  std::vector<std::size_t> landed(s.trials);
  parallel_for(s.trials, workers, [&](std::size_t k) {
    RandomStream rng(s.seed, StreamTag::kChain, k);
    LatticeState state = y;
    advance_chain(model, e.K(), t0, t1, state, pu, pv, rng);
    landed[k] = *law.find(state);
  }, 256);
  std::vector<std::size_t> hits(states.size(), 0);
  for (std::size_t k : landed) ++hits[k];

  ResultTable table = base_table("oracle", e);
  table.columns = {"state", "exact", "empirical", "standard_error", "z"};
  std::vector<double> empirical(states.size());
  std::size_t beyond = 0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    empirical[k] = static_cast<double>(hits[k]) / static_cast<double>(s.trials);
    const double se = binomial_standard_error(law.weights()[k], s.trials);
    const double z = se > 0.0 ? (empirical[k] - law.weights()[k]) / se : 0.0;
    beyond += std::abs(z) > 3.0;
    table.add_row({states[k].to_string(), law.weights()[k], empirical[k], se, z});
  }
  const double tv = total_variation(law, empirical);
  const double dynkin = dynkin_residual(model, [](const Coords& x) { return x[0]; }, t0,
                                        std::min(t1, t0 + 0.5), y, *u, *v, opts);
  table.checks.push_back({"total variation", tv <= 0.01, "TV = " + format_double(tv) + " (limit 0.01)"});
  table.checks.push_back({"dynkin identity", dynkin <= 1e-8, "residual = " + format_double(dynkin) + " (limit 1e-8)"});
  table.summary["total_variation"] = tv;
  table.summary["states_beyond_3se"] = beyond;
  table.summary["dynkin_residual"] = dynkin;
  return table;
}

// ---------------------------------------------------------------------------
// Value field diagnostics

inline ResultTable run_value_report(const ExperimentSetup& e) {
  const Scenario& s = e.scenario;
  const ValueField& field = *e.field;
  SupersolutionCheck spec;
  spec.coefficient = s.mono_coefficient;
  spec.lambda_points = s.lambda_points;
  spec.seed = s.seed;
  const SupersolutionReport sup = verify_supersolution(field, e.model, e.K(), spec);
  const SupersolutionReport sub = verify_subsolution(field, e.model, e.K(), spec);

  ResultTable table = base_table("value", e);
  table.columns = {"particles", "state", "value"};
  for (int M : s.particles) {
    const LatticeState y = round_to_lattice(initial_point(s), M);
    table.add_row({M, y.to_string(), field.eval(s.start_time, y.point())});
  }
  table.summary["value_at_initial"] = field.eval(s.start_time, initial_point(s).coords());
  table.summary["min_value"] = field.min_value();
  table.summary["max_value"] = field.max_value();
  table.summary["supersolution"] = {{"checks", sup.checks}, {"violations", sup.violations}, {"worst_slack", sup.worst_slack}};
  table.summary["subsolution"] = {{"checks", sub.checks}, {"violations", sub.violations}, {"worst_slack", sub.worst_slack}};
  table.checks.push_back({"supersolution", sup.violations == 0, std::to_string(sup.violations) + " of " + std::to_string(sup.checks)});
  table.checks.push_back({"subsolution", sub.violations == 0, std::to_string(sub.violations) + " of " + std::to_string(sub.checks)});
  return table;
}

// ---------------------------------------------------------------------------
// Single episode dump

inline ojson trajectory_to_json(const TrajectoryRecord& rec, const RateModel& model) {
  ojson steps = ojson::array();
  auto opt_point = [](const std::optional<SimplexPoint>& w) {
    if (!w) return ojson(nullptr);
    return ojson(std::vector<double>(w->coords().begin(), w->coords().end()));
  };
  auto finite = [](double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); };
  for (const StepRecord& st : rec.steps) {
    const Counts& c = st.x.counts();
    steps.push_back({{"t", st.t},
                     {"counts", std::vector<int>(c.begin(), c.end())},
                     {"guide_first", opt_point(st.guide_first)},
                     {"guide_second", opt_point(st.guide_second)},
                     {"u", st.u ? ojson(model.u_grid()[*st.u]) : ojson(nullptr)},
                     {"v", st.v ? ojson(model.v_grid()[*st.v]) : ojson(nullptr)},
                     {"value_first", finite(st.value_first)},
                     {"value_second", finite(st.value_second)},
                     {"violation_first", st.violation_first},
                     {"violation_second", st.violation_second}});
  }
  ojson jumps = ojson::array();
  for (const JumpEvent& j : rec.jumps) jumps.push_back({j.time, j.from, j.to});
  return {{"payoff", rec.payoff},
          {"final_counts", std::vector<int>(rec.final_state.counts().begin(), rec.final_state.counts().end())},
          {"guide_updates", rec.guide_updates},
          {"guide_violations", rec.guide_violations},
          {"steps", steps},
          {"jumps", jumps}};
}

}  // namespace xshift
