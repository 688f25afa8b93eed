#include <cmath>

#include <gtest/gtest.h>

#include "xshift/guide.hpp"
#include "xshift/models.hpp"
#include "xshift/stats.hpp"
#include "xshift/strategy.hpp"

using namespace xshift;

namespace {

constexpr ControlId kZero = 0, kHalf = 1, kOne = 2;

std::shared_ptr<const SimplexGrid> grid(std::size_t d, int n) {
  return std::make_shared<const SimplexGrid>(build_simplex_grid(d, n));
}

const ValueField& two_type_field() {
  static const ValueField f = solve_value(two_type_model(), 200, grid(2, 200));
  return f;
}

ValueField constant_field(std::size_t d, double c) {
  return ValueField::from_function(grid(d, 10), 0.0, 1.0, 10, [c](double, const Coords&) { return c; });
}

// Players swapped: the new first player owns the old second player's rates.
RateModel swapped_two_type() {
  const ControlGrid g = ControlGrid::uniform(0.0, 1.0, 3);
  return RateModel(
      "two-type-swapped", 2, 1.0, g, g,
      [](double, const Coords&, double u, double v) {
        RateMatrix q(2);
        q(0, 1) = v;
        q(1, 0) = u;
        q.fill_diagonal();
        return q;
      },
      [](const Coords& x) { return -x[0]; });
}

}  // namespace

TEST(Characteristic, ZeroModelStaysPut) {
  const SimplexPoint x0(Coords{0.2, 0.3, 0.5});
  const auto r = integrate_characteristic(zero_model(3), 0.0, 1.0, x0, constant_schedule(0), constant_schedule(0));
  EXPECT_EQ(r.point.coords(), x0.coords());
}

TEST(Characteristic, TwoTypeClosedForm) {
  const auto r = integrate_characteristic(two_type_model(), 0.0, 1.0, SimplexPoint(Coords{1.0, 0.0}),
                                          constant_schedule(kOne), constant_schedule(kOne));
  EXPECT_NEAR(r.point[0], 0.5 + 0.5 * std::exp(-2.0), 1e-6);
  EXPECT_NEAR(r.point[0] + r.point[1], 1.0, 1e-10);
}

TEST(Characteristic, PropertySpeedBoundAndMassConservation) {
  const RateModel m = three_type_model();
  const double bound = 1.75 * std::sqrt(3.0);
  for (std::uint64_t k = 0; k < 500; ++k) {
    RandomStream rng(21, StreamTag::kSamples, k);
    const SimplexPoint x0(sample_simplex(3, rng));
    const double t0 = 0.9 * rng.uniform(), dt = 0.1 * rng.uniform();
    const ControlMix mu{rng.below(3), rng.below(3), rng.uniform()};
    const auto r = integrate_characteristic(m, t0, t0 + dt, x0, [mu](double) { return mu; },
                                            constant_schedule(rng.below(3)));
    EXPECT_LE(distance(r.point.coords(), x0.coords()), bound * dt + 1e-9);
    EXPECT_NEAR(r.point.coords().sum(), 1.0, 1e-10);
  }
}

TEST(InitGuide, StartsAtChainState) {
  const GuideState g = init_guide(0.0, SimplexPoint(Coords{1.0, 0.0}));
  EXPECT_EQ(g.w.coords(), (Coords{1.0, 0.0}));
  EXPECT_EQ(g.t, 0.0);
  const GuideState h = init_guide(0.5, SimplexPoint(Coords{0.25, 0.75}));
  EXPECT_EQ(h.w.coords(), (Coords{0.25, 0.75}));
  EXPECT_EQ(h.t, 0.5);
}

TEST(GuideAdvance, ConstantFieldPicksLowestIndexCharacteristic) {
  const RateModel m = two_type_model();
  const ValueField f = constant_field(2, 0.0);
  const SimplexPoint w(Coords{0.7, 0.3});
  const GuideStep a = guide_advance_first(f, m, 0.1, 0.3, w, kOne);
  EXPECT_EQ(a.control.a, kZero);
  EXPECT_TRUE(a.control.is_pure());
  EXPECT_FALSE(a.monotonicity_violation);
  const auto expect = integrate_characteristic(m, 0.1, 0.3, w, constant_schedule(kZero), constant_schedule(kOne));
  EXPECT_LT(distance(a.state.w.coords(), expect.point.coords()), 1e-15);
  const GuideStep b = guide_advance_second(f, m, 0.1, 0.3, w, kHalf);
  EXPECT_EQ(b.control.a, kZero);
  EXPECT_FALSE(b.monotonicity_violation);
}

TEST(GuideAdvance, FirstPlayerDrivesValueDown) {
  const RateModel m = two_type_model();
  GuideOptions opt;
  opt.tolerance = monotonicity_tolerance(two_type_field(), 1.0);
  const GuideStep g = guide_advance_first(two_type_field(), m, 0.0, 0.01, SimplexPoint(Coords{1.0, 0.0}), kOne, opt);
  EXPECT_TRUE(g.control.is_pure());
  EXPECT_EQ(g.control.a, kOne);
  EXPECT_NEAR(g.state.w[0], 0.5 + 0.5 * std::exp(-0.02), 1e-6);
  EXPECT_FALSE(g.monotonicity_violation);
  EXPECT_DOUBLE_EQ(g.state.t, 0.01);
}

TEST(GuideAdvance, SecondPlayerDrivesValueUp) {
  const RateModel m = two_type_model();
  GuideOptions opt;
  opt.tolerance = monotonicity_tolerance(two_type_field(), 1.0);
  const double delta = 0.01;
  const GuideStep g = guide_advance_second(two_type_field(), m, 0.2, 0.2 + delta, SimplexPoint(Coords{0.0, 1.0}), kOne, opt);
  EXPECT_EQ(g.control.a, kOne);
  EXPECT_TRUE(g.control.is_pure());
  EXPECT_NEAR(g.state.w[0], 0.5 - 0.5 * std::exp(-2.0 * delta), 1e-6);
  EXPECT_NEAR(g.state.w[0], delta, delta * delta + 1e-6);
  EXPECT_FALSE(g.monotonicity_violation);
}

TEST(GuideAdvance, ZeroModelKeepsGuide) {
  const ValueField f = ValueField::from_function(grid(2, 10), 0.0, 1.0, 10, [](double, const Coords& x) { return x[0]; });
  const SimplexPoint w(Coords{0.3, 0.7});
  EXPECT_EQ(guide_advance_first(f, zero_model(), 0.0, 0.5, w, 0).state.w.coords(), w.coords());
  EXPECT_EQ(guide_advance_second(f, zero_model(), 0.0, 0.5, w, 0).state.w.coords(), w.coords());
}

TEST(GuideAdvance, PropertyMonotoneAlongSolvedField) {
  const RateModel m = three_type_model();
  const ValueField f = solve_value(m, 60, grid(3, 30));
  GuideOptions opt;
  opt.tolerance = monotonicity_tolerance(f, 1.75);
  std::size_t flagged = 0, total = 0;
  for (std::uint64_t k = 0; k < 300; ++k) {
    RandomStream rng(22, StreamTag::kSamples, k);
    const SimplexPoint w(sample_simplex(3, rng));
    const double t = 0.95 * rng.uniform();
    const GuideStep a = guide_advance_first(f, m, t, t + 0.01, w, rng.below(3), opt);
    const GuideStep b = guide_advance_second(f, m, t, t + 0.01, w, rng.below(3), opt);
    flagged += a.monotonicity_violation + b.monotonicity_violation;
    total += 2;
    EXPECT_LE(distance(a.state.w.coords(), w.coords()), 1.75 * std::sqrt(3.0) * 0.01 + 1e-9);
  }
  EXPECT_LE(static_cast<double>(flagged) / total, 0.01);
}

TEST(GuideAdvance, MirrorSymmetryUnderPlayerSwap) {
  // Negating the field and swapping the players turns the second player's
  // maximization into the first player's minimization, step for step.
  const ValueField& f = two_type_field();
  std::vector<double> neg(f.table());
  for (double& v : neg) v = -v;
  const ValueField g(f.shared_grid(), f.start(), f.horizon(), f.time_steps(), neg, "two-type-swapped");
  const RateModel m = two_type_model(), s = swapped_two_type();
  for (std::uint64_t k = 0; k < 200; ++k) {
    RandomStream rng(23, StreamTag::kSamples, k);
    const SimplexPoint w(sample_simplex(2, rng));
    const double t = 0.95 * rng.uniform();
    const ControlId other = rng.below(3);
    const GuideStep a = guide_advance_second(f, m, t, t + 0.02, w, other);
    const GuideStep b = guide_advance_first(g, s, t, t + 0.02, w, other);
    EXPECT_EQ(a.control.a, b.control.a);
    EXPECT_EQ(a.control.b, b.control.b);
    EXPECT_EQ(a.control.lambda, b.control.lambda);
    EXPECT_EQ(a.state.w.coords(), b.state.w.coords());
  }
}

TEST(ExtremalControls, SpecExamples) {
  const RateModel m = two_type_model();
  const auto same = extremal_controls(m, 0.0, Coords{0.3, 0.7}, Coords{0.3, 0.7});
  EXPECT_EQ(same.u, 0u);
  EXPECT_EQ(same.v, 0u);
  const auto above = extremal_controls(m, 0.0, Coords{0.6, 0.4}, Coords{0.5, 0.5});
  EXPECT_EQ(above.u, kOne);
  EXPECT_EQ(above.v, kOne);
  const auto below = extremal_controls(m, 0.0, Coords{0.4, 0.6}, Coords{0.5, 0.5});
  EXPECT_EQ(below.u, kZero);
  EXPECT_EQ(below.v, kZero);
}

TEST(ExtremalControls, PropertyOptimalityCertificatesAndSaddle) {
  for (const auto& m : {two_type_model(), three_type_model(), two_type_model(1.0, 6)}) {
    const std::size_t d = m.dimension();
    for (std::uint64_t k = 0; k < 500; ++k) {
      RandomStream rng(24, StreamTag::kSamples, k);
      const Coords x = sample_simplex(d, rng), w = sample_simplex(d, rng);
      const double t = rng.uniform() * m.horizon();
      const PayoffTable J(m, t, x, x - w);
      const auto [u, v] = extremal_controls(m, t, x, w);
      auto row_max = [&](ControlId a) {
        double r = -INFINITY;
        for (ControlId b = 0; b < J.cols(); ++b) r = std::max(r, J(a, b));
        return r;
      };
      auto col_min = [&](ControlId b) {
        double r = INFINITY;
        for (ControlId a = 0; a < J.rows(); ++a) r = std::min(r, J(a, b));
        return r;
      };
      for (ControlId a = 0; a < J.rows(); ++a) EXPECT_LE(row_max(u), row_max(a));
      for (ControlId b = 0; b < J.cols(); ++b) EXPECT_GE(col_min(v), col_min(b));
      ASSERT_NEAR(isaacs_gap(m, t, x, x - w), 0.0, 1e-14);
      for (ControlId a = 0; a < J.rows(); ++a) {
        for (ControlId b = 0; b < J.cols(); ++b) EXPECT_LE(J(u, b), J(a, v) + 1e-14);
      }
    }
  }
}

TEST(ExtremalControls, PropertyInvariantUnderDisplacementScaling) {
  for (const auto& m : {two_type_model(), three_type_model()}) {
    const std::size_t d = m.dimension();
    for (std::uint64_t k = 0; k < 500; ++k) {
      RandomStream rng(25, StreamTag::kSamples, k);
      const Coords x = sample_simplex(d, rng), w = sample_simplex(d, rng);
      const double c = 0.1 + 0.9 * rng.uniform();
      const Coords w2 = x - c * (x - w);
      const auto a = extremal_controls(m, 0.4, x, w), b = extremal_controls(m, 0.4, x, w2);
      const auto p = second_player_extremal_controls(m, 0.4, x, w);
      const auto q = second_player_extremal_controls(m, 0.4, x, w2);
      EXPECT_EQ(a.u, b.u);
      EXPECT_EQ(a.v, b.v);
      EXPECT_EQ(p.u, q.u);
      EXPECT_EQ(p.v, q.v);
    }
  }
}

TEST(Strategy, SelectorsFollowSignAnalysis) {
  const RateModel m = two_type_model();
  const auto first = make_first_player_strategy(two_type_field(), m);
  const auto second = make_second_player_strategy(two_type_field(), m);
  const SimplexPoint y(Coords{0.5, 0.5});
  EXPECT_EQ(first.select(0.0, y.coords(), y), 0u);
  EXPECT_EQ(second.select(0.0, y.coords(), y), 0u);
  EXPECT_EQ(first.select(0.3, Coords{0.6, 0.4}, SimplexPoint(Coords{0.5, 0.5})), kOne);
  EXPECT_EQ(second.select(0.3, Coords{0.4, 0.6}, SimplexPoint(Coords{0.5, 0.5})), kOne);
  EXPECT_EQ(first.select(0.3, Coords{0.6, 0.4}, SimplexPoint(Coords{0.5, 0.5})),
            first.select(0.3, Coords{0.6, 0.4}, SimplexPoint(Coords{0.5, 0.5})));
  EXPECT_EQ(first.initialize(0.2, y).w.coords(), y.coords());
  EXPECT_EQ(first.role(), Player::kFirst);
  EXPECT_EQ(second.role(), Player::kSecond);
}

TEST(Partition, UniformAndValidation) {
  const Partition p = Partition::uniform(0.0, 1.0, 4);
  EXPECT_EQ(p.steps(), 4u);
  EXPECT_DOUBLE_EQ(p.diameter(), 0.25);
  EXPECT_EQ(p.times().back(), 1.0);
  EXPECT_DOUBLE_EQ(Partition({0.0, 0.1, 0.5, 1.0}).diameter(), 0.5);
  EXPECT_THROW(Partition({0.0, 0.5, 0.5, 1.0}), Error);
  EXPECT_THROW(Partition({0.0}), Error);
  EXPECT_THROW(Partition::uniform(0.0, 1.0, 0), Error);
}

TEST(MakePlayer, ParsesSpecs) {
  const RateModel m = two_type_model();
  const auto& f = two_type_field();
  EXPECT_TRUE(std::holds_alternative<ControlWithGuideStrategy>(make_player("extremal", Player::kSecond, m, f, {})));
  const auto c = std::get<ControlPolicy>(make_player("constant:0.5", Player::kSecond, m, f, {}));
  RandomStream rng(1, StreamTag::kAdversary, 0);
  EXPECT_EQ(c.choose(0.0, LatticeState{1, 1}, rng), kHalf);
  EXPECT_EQ(std::get<ControlPolicy>(make_player("random", Player::kFirst, m, f, {})).kind(), ControlPolicy::Kind::kPerStep);
  EXPECT_EQ(std::get<ControlPolicy>(make_player("greedy", Player::kFirst, m, f, {})).kind(), ControlPolicy::Kind::kFeedback);
  EXPECT_THROW(make_player("constant:0.3", Player::kSecond, m, f, {}), Error);
  EXPECT_THROW(make_player("constant:abc", Player::kSecond, m, f, {}), Error);
  EXPECT_THROW(make_player("sneaky", Player::kSecond, m, f, {}), Error);
}

TEST(GreedyPolicy, PushesPayoffInItsDirection) {
  const RateModel m = two_type_model();
  const auto g2 = greedy_policy(m, Player::kSecond), g1 = greedy_policy(m, Player::kFirst);
  RandomStream rng(1, StreamTag::kAdversary, 0);
  EXPECT_EQ(g2.choose(0.0, LatticeState{5, 5}, rng), kOne);
  EXPECT_EQ(g1.choose(0.0, LatticeState{5, 5}, rng), kOne);
}

TEST(RunEpisode, ZeroModelIsStatic) {
  const RateModel m = zero_model();
  const ValueField f = ValueField::from_function(grid(2, 10), 0.0, 1.0, 10, [](double, const Coords& x) { return x[0]; });
  const LatticeState y{7, 3};
  const PlayerSpec p1 = make_first_player_strategy(f, m), p2 = make_second_player_strategy(f, m);
  RandomStream rng(1, StreamTag::kChain, 0);
  const TrajectoryRecord r = run_episode(m, 0.0, y, Partition::uniform(0.0, 1.0, 20), p1, p2, rng);
  ASSERT_EQ(r.steps.size(), 21u);
  for (const auto& s : r.steps) {
    EXPECT_EQ(s.x, y);
    EXPECT_EQ(s.guide_first->coords(), y.point());
    EXPECT_EQ(s.guide_second->coords(), y.point());
  }
  EXPECT_DOUBLE_EQ(r.payoff, 0.7);
  EXPECT_EQ(r.guide_updates, 40u);
  EXPECT_EQ(r.guide_violations, 0u);
}

TEST(RunEpisode, RecordShapeAndDeterminism) {
  const RateModel m = two_type_model();
  const auto& f = two_type_field();
  GuideOptions opt;
  opt.tolerance = monotonicity_tolerance(f, 1.0);
  const PlayerSpec p1 = make_first_player_strategy(f, m, opt);
  const PlayerSpec p2 = make_player("random", Player::kSecond, m, f, opt);
  const Partition part = Partition::uniform(0.0, 1.0, 50);
  RandomStream a(5, StreamTag::kChain, 9), b(5, StreamTag::kChain, 9);
  const TrajectoryRecord r1 = run_episode(m, 1.0, LatticeState{20, 0}, part, p1, p2, a, {true});
  const TrajectoryRecord r2 = run_episode(m, 1.0, LatticeState{20, 0}, part, p1, p2, b, {true});
  ASSERT_EQ(r1.steps.size(), 51u);
  EXPECT_FALSE(r1.steps.back().u.has_value());
  EXPECT_TRUE(r1.steps.front().u.has_value());
  EXPECT_FALSE(r1.steps.front().guide_second.has_value());
  EXPECT_EQ(r1.steps.front().u.value(), 0u);  // x = w at the start
  EXPECT_EQ(r1.payoff, m.payoff(r1.final_state.point()));
  EXPECT_EQ(r1.final_state, r1.steps.back().x);
  EXPECT_FALSE(r1.jumps.empty());
  EXPECT_EQ(r1.payoff, r2.payoff);
  EXPECT_EQ(r1.jumps.size(), r2.jumps.size());
  for (std::size_t k = 0; k < r1.steps.size(); ++k) {
    EXPECT_EQ(r1.steps[k].x, r2.steps[k].x);
    EXPECT_EQ(r1.steps[k].guide_first->coords(), r2.steps[k].guide_first->coords());
    EXPECT_EQ(r1.steps[k].u, r2.steps[k].u);
    EXPECT_EQ(r1.steps[k].v, r2.steps[k].v);
    EXPECT_EQ(r1.steps[k].x.total(), 20);
  }
}

TEST(RunEpisode, RejectsMismatchedRoles) {
  const RateModel m = two_type_model();
  const auto& f = two_type_field();
  const PlayerSpec p = make_second_player_strategy(f, m);
  RandomStream rng(1, StreamTag::kChain, 0);
  EXPECT_THROW(run_episode(m, 1.0, LatticeState{2, 0}, Partition::uniform(0.0, 1.0, 2), p, p, rng), Error);
}

TEST(RunEpisode, FirstPlayerBoundAgainstConstantOpponent) {
  // M = 20, m = 100, opponent v = 1, from (1, 0): mean <= Val + R sqrt(D h) + 2 SEM
  const RateModel m = two_type_model();
  const auto& f = two_type_field();
  GuideOptions opt;
  opt.tolerance = monotonicity_tolerance(f, 1.0);
  const PlayerSpec p1 = make_first_player_strategy(f, m, opt);
  const PlayerSpec p2 = ControlPolicy::constant(kOne);
  const Partition part = Partition::uniform(0.0, 1.0, 100);
  std::vector<double> payoff(2000);
  for (std::size_t k = 0; k < payoff.size(); ++k) {
    RandomStream rng(31, StreamTag::kChain, k);
    payoff[k] = run_episode(m, 1.0, LatticeState{20, 0}, part, p1, p2, rng).payoff;
  }
  const SampleSummary s = summarize(payoff);
  const double D = 2.0 * 4.0 * 1.0 * 1.0;
  const double val = f.eval(0.0, Coords{1.0, 0.0});
  EXPECT_LE(s.mean, val + std::sqrt(D * 0.05) + 2.0 * s.sem);
}
