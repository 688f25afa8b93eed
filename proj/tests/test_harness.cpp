#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "xshift/xshift.hpp"

using namespace xshift;

namespace {

Scenario small_scenario() {
  Scenario s;
  s.particles = {10, 20};
  s.steps = {20};
  s.trials = 200;
  s.time_steps = 40;
  s.space_steps = 40;
  s.seed = 99;
  return s;
}

Scenario zero_scenario() {
  Scenario s = small_scenario();
  s.model = "zero";
  s.initial = {0.3, 0.7};
  return s;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Scenario, ParsesNestedKeysAndScalars) {
  const Scenario s = scenario_from_json(nlohmann::json::parse(R"({
    "model": {"name": "two-type", "params": {"horizon": 2.0}},
    "particles": 50, "steps": [10, 20], "initial": [0.5, 0.5], "trials": 7,
    "adversaries": "constant:1", "value_grid": {"time_steps": 30, "space_steps": 40},
    "guide": {"lambda_points": 5}, "seed": 3, "lemma": {"deltas": 0.1, "controls": {"u": 0.5}}
  })"));
  EXPECT_EQ(s.particles, std::vector<int>{50});
  EXPECT_EQ(s.steps, (std::vector<std::size_t>{10, 20}));
  EXPECT_EQ(s.adversaries, std::vector<std::string>{"constant:1"});
  EXPECT_EQ(s.make_model().horizon(), 2.0);
  EXPECT_EQ(s.time_steps, 30u);
  EXPECT_EQ(s.lambda_points, 5u);
  EXPECT_EQ(s.deltas, std::vector<double>{0.1});
  EXPECT_EQ(s.control_u, 0.5);
  EXPECT_EQ(s.control_v, 0.0);
  const Scenario back = scenario_from_json(nlohmann::json::parse(scenario_to_json(s).dump()));
  EXPECT_EQ(scenario_to_json(back).dump(), scenario_to_json(s).dump());
}

TEST(Scenario, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"particle": 10})")), Error);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"guide": {"lambda": 3}})")), Error);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"initial": [0.5, 0.6]})")), Error);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"initial": [0.2, 0.3, 0.5]})")), Error);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"trials": 0})")), Error);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"model": "nonesuch"})")), Error);
  EXPECT_THROW(scenario_from_json(nlohmann::json::parse(R"({"particles": "ten"})")), Error);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), Error);
}

TEST(Scenario, BundledScenariosLoad) {
  for (const char* name : {"theorem1", "corollary", "lemma1", "lemma2"}) {
    const Scenario s = load_scenario(std::string(XSHIFT_SCENARIO_DIR) + "/" + name + ".json");
    EXPECT_EQ(s.model, "two-type") << name;
  }
}

TEST(Stats, SummaryMatchesHandComputation) {
  const std::vector<double> v{1.0, 2.0, 4.0, 7.0};
  const SampleSummary s = summarize(v);
  EXPECT_EQ(s.count, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 3.5);
  EXPECT_DOUBLE_EQ(s.sd, std::sqrt(21.0 / 3.0));
  EXPECT_DOUBLE_EQ(s.sem, std::sqrt(21.0 / 3.0) / 2.0);
  EXPECT_EQ(summarize(std::vector<double>{5.0}).sem, 0.0);
}

TEST(Stats, WilsonInterval) {
  // 0 of 2000: upper end z^2 / (n + z^2)
  const double z2 = 1.959963984540054 * 1.959963984540054;
  const Interval a = wilson_interval(0, 2000);
  EXPECT_EQ(a.lo, 0.0);
  EXPECT_NEAR(a.hi, z2 / (2000 + z2), 1e-15);
  const Interval b = wilson_interval(50, 100);
  EXPECT_NEAR(b.lo + b.hi, 1.0, 1e-15);
  EXPECT_NEAR(b.hi, 0.5961684696340044, 1e-12);
  EXPECT_EQ(wilson_interval(0, 0).half_width(), 0.5);
}

TEST(Stats, LogLogSlope) {
  const std::vector<double> h{0.1, 0.05, 0.025, 0.0125};
  std::vector<double> y;
  for (double x : h) y.push_back(3.0 * std::sqrt(x));
  EXPECT_NEAR(loglog_slope(h, y), 0.5, 1e-12);
  EXPECT_TRUE(std::isnan(loglog_slope(std::vector<double>{0.1}, std::vector<double>{1.0})));
  EXPECT_TRUE(std::isnan(loglog_slope(h, std::vector<double>{1.0, 0.0, 1.0, 1.0})));
  EXPECT_TRUE(std::isnan(loglog_slope(std::vector<double>{0.1, 0.1}, std::vector<double>{1.0, 2.0})));
}

TEST(Results, CsvQuotingAndFloatFormat) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(NAN), "nan");
  EXPECT_EQ(format_double(-INFINITY), "-inf");
  EXPECT_EQ(csv_cell(ojson("a,b")), "\"a,b\"");
  EXPECT_EQ(csv_cell(ojson("say \"hi\"")), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_cell(ojson(true)), "true");
  EXPECT_EQ(csv_cell(ojson(42)), "42");
  EXPECT_EQ(csv_cell(ojson()), "");
}

TEST(Results, HeaderOnlyTableAndRowWidth) {
  ResultTable t;
  t.kind = "demo";
  t.columns = {"a", "b"};
  EXPECT_EQ(to_csv(t), "a,b\n");
  EXPECT_TRUE(to_json(t)["rows"].empty());
  EXPECT_THROW(t.add_row({1}), Error);
  t.add_row({1, NAN});
  EXPECT_EQ(to_json(t)["rows"][0]["b"], "nan");
  EXPECT_TRUE(t.passed());
  t.checks.push_back({"x", false, ""});
  EXPECT_FALSE(to_json(t)["passed"].get<bool>());
}

TEST(Results, EmitWritesBothFiles) {
  ResultTable t;
  t.kind = "demo";
  t.columns = {"x"};
  t.add_row({0.25});
  const auto base = (std::filesystem::temp_directory_path() / "xshift_emit" / "out").string();
  emit_results(t, base);
  EXPECT_EQ(slurp(base + ".csv"), "x\n0.25\n");
  const auto j = nlohmann::json::parse(slurp(base + ".json"));
  EXPECT_EQ(j["kind"], "demo");
  EXPECT_EQ(j["rows"][0]["x"], 0.25);
  std::filesystem::remove_all(std::filesystem::path(base).parent_path());
}

TEST(Experiments, ZeroModelIsDegenerateButPasses) {
  const ExperimentSetup e = prepare(zero_scenario(), 1);
  const ResultTable t = run_theorem1_experiment(e, 1);
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& row : t.rows) {
    EXPECT_EQ(row[7].get<double>(), 0.3);   // mean
    EXPECT_EQ(row[8].get<double>(), 0.0);   // sem
    EXPECT_EQ(row[9].get<double>(), 0.3);   // value
    EXPECT_EQ(row[21].get<std::string>(), "degenerate");
  }
  EXPECT_TRUE(t.passed());
  EXPECT_EQ(t.columns.size(), 25u);
  EXPECT_TRUE(run_corollary_experiment(e, 1).passed());
}

TEST(Experiments, ColumnLayout) {
  const auto& c = bound_columns();
  EXPECT_EQ(c[15], "mean_ok");
  EXPECT_EQ(c[21], "exceed_status");
  EXPECT_EQ(c.size(), 25u);
}

TEST(Experiments, ResultsDoNotDependOnWorkerCount) {
  Scenario s = small_scenario();
  s.adversaries = {"extremal", "random", "greedy"};
  const ExperimentSetup a = prepare(s, 1), b = prepare(s, 4);
  EXPECT_EQ(a.field->table(), b.field->table());
  EXPECT_EQ(to_csv(run_theorem1_experiment(a, 1)), to_csv(run_theorem1_experiment(b, 4)));
  EXPECT_EQ(to_json(run_corollary_experiment(a, 1)).dump(), to_json(run_corollary_experiment(b, 3)).dump());
  s.trials = 2000;
  s.deltas = {0.01};
  s.pairs = 5;
  s.particles = {20};
  const ExperimentSetup c = prepare(s, 1);
  EXPECT_EQ(to_csv(run_lemma2_check(c, 1)), to_csv(run_lemma2_check(c, 4)));
}

TEST(Experiments, OneStepChecksOnZeroModel) {
  Scenario s = zero_scenario();
  s.particles = {4};
  s.initial = {0.5, 0.5};
  s.control_u = s.control_v = 0.0;
  const ExperimentSetup e = prepare(s, 1, false);
  const ResultTable l1 = run_lemma1_check(e);
  EXPECT_TRUE(l1.passed());
  s.trials = 100;
  s.pairs = 3;
  s.deltas = {0.05};
  const ResultTable l2 = run_lemma2_check(prepare(s, 1), 1);
  EXPECT_TRUE(l2.passed());
  EXPECT_EQ(l2.summary["violations"].get<std::size_t>(), 0u);
}

TEST(Experiments, OneStepDistanceHoldsOnSmallTwoTypeRun) {
  Scenario s = small_scenario();
  s.particles = {20};
  s.initial = {0.5, 0.5};
  s.trials = 2000;
  s.pairs = 10;
  s.deltas = {0.01};
  s.adversaries = {"extremal", "constant:1"};
  const ResultTable t = run_lemma2_check(prepare(s, 1), 1);
  EXPECT_TRUE(t.passed());
}

TEST(Experiments, OracleCheckOnThreeTypes) {
  Scenario s;
  s.model = "three-type";
  s.initial = {0.5, 0.25, 0.25};
  s.particles = {8};
  s.trials = 100000;
  const ResultTable t = run_oracle_check(prepare(s, 1, false), 1);
  EXPECT_TRUE(t.passed()) << to_json(t).dump(2);
}

TEST(Experiments, TrajectoryJsonShape) {
  const ExperimentSetup e = prepare(small_scenario(), 1);
  const PlayerSpec p1 = make_first_player_strategy(*e.field, e.model, e.guide);
  const PlayerSpec p2 = make_second_player_strategy(*e.field, e.model, e.guide);
  RandomStream rng(1, StreamTag::kChain, 0);
  const auto rec = run_episode(e.model, e.K(), LatticeState{10, 0}, Partition::uniform(0.0, 1.0, 5), p1, p2, rng, {true});
  const ojson j = trajectory_to_json(rec, e.model);
  EXPECT_EQ(j["steps"].size(), 6u);
  EXPECT_EQ(j["jumps"].size(), rec.jumps.size());
  EXPECT_DOUBLE_EQ(j["payoff"].get<double>(), rec.payoff);
}
