// Command-line front end: one subcommand per experiment. Results go to
// <out>.csv and <out>.json; the exit code is 0 iff every check passed.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "xshift/xshift.hpp"

namespace {

struct Common {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> field;
  std::optional<std::size_t> trials;
  std::size_t workers = 1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--scenario", c.scenario, "scenario file (JSON)")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "override the scenario seed");
  app->add_option("--out", c.out, "output base path (writes <out>.csv and <out>.json)");
  app->add_option("--field", c.field, "use a cached value field instead of solving");
  app->add_option("--trials", c.trials, "override the trial count");
  app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
}

xshift::Scenario load(const Common& c) {
  xshift::Scenario s = c.scenario.empty() ? xshift::Scenario{} : xshift::load_scenario(c.scenario);
  if (c.seed) s.seed = *c.seed;
  if (c.out) s.output = *c.out;
  if (c.field) s.value_field = *c.field;
  if (c.trials) s.trials = *c.trials;
  xshift::validate(s);
  return s;
}

int report(const xshift::ResultTable& t, const std::string& out) {
  xshift::emit_results(t, out);
  for (const auto& c : t.checks) {
    std::printf("%s  %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
  }
  std::printf("wrote %s.csv and %s.json\n", out.c_str(), out.c_str());
  return t.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extremal-shift strategies for controlled Markov chains on the lattice simplex"};
  app.require_subcommand(1);

  Common common;
  std::string export_field;
  std::size_t trial = 0;

  auto* value = app.add_subcommand("value", "solve the value field and check its monotonicity");
  add_common(value, common);
  value->add_option("--export-field", export_field, "write the solved field to this file");

  auto* simulate = app.add_subcommand("simulate", "run and dump one episode");
  add_common(simulate, common);
  simulate->add_option("--trial", trial, "trial index (selects the random stream)");

  auto* experiment = app.add_subcommand("experiment", "first player's extremal shift vs adversaries");
  auto* corollary = app.add_subcommand("corollary", "second player's extremal shift vs adversaries");
  auto* lemma1 = app.add_subcommand("check-lemma1", "transition probabilities vs first-order expansion");
  auto* lemma2 = app.add_subcommand("check-lemma2", "one-step chain-to-guide distance estimate");
  auto* oracle = app.add_subcommand("oracle", "simulator vs master equation, Dynkin identity");
  for (auto* sub : {experiment, corollary, lemma1, lemma2, oracle}) add_common(sub, common);

  CLI11_PARSE(app, argc, argv);

  try {
    const xshift::Scenario s = load(common);
    const std::size_t w = common.workers;
    if (value->parsed()) {
      const auto e = xshift::prepare(s, w);
      if (!export_field.empty()) xshift::save_field(*e.field, export_field);
      return report(xshift::run_value_report(e), s.output);
    }
    if (simulate->parsed()) {
      const auto e = xshift::prepare(s, w);
      const auto y = xshift::round_to_lattice(xshift::initial_point(s), s.particles.front());
      const auto partition = xshift::Partition::uniform(s.start_time, e.model.horizon(), s.steps.front());
      const xshift::PlayerSpec first =
          xshift::ControlWithGuideStrategy(xshift::Player::kFirst, *e.field, e.model, e.guide);
      const xshift::PlayerSpec second =
          xshift::make_player(s.adversaries.front(), xshift::Player::kSecond, e.model, *e.field, e.guide);
      xshift::RandomStream rng(s.seed, xshift::StreamTag::kChain, trial);
      const auto rec = xshift::run_episode(e.model, e.K(), y, partition, first, second, rng, {true});
      xshift::ojson j = xshift::trajectory_to_json(rec, e.model);
      j["scenario"] = xshift::scenario_to_json(s);
      j["scenario"].erase("output");
      j["trial"] = trial;
      xshift::write_text(s.output + ".json", j.dump(2) + "\n");
      std::printf("payoff %s, %zu jumps, %zu guide violations; wrote %s.json\n",
                  xshift::format_double(rec.payoff).c_str(), rec.jumps.size(), rec.guide_violations,
                  s.output.c_str());
      return 0;
    }
    if (experiment->parsed()) return report(xshift::run_theorem1_experiment(xshift::prepare(s, w), w), s.output);
    if (corollary->parsed()) return report(xshift::run_corollary_experiment(xshift::prepare(s, w), w), s.output);
    if (lemma1->parsed()) return report(xshift::run_lemma1_check(xshift::prepare(s, w, false)), s.output);
    if (lemma2->parsed()) return report(xshift::run_lemma2_check(xshift::prepare(s, w), w), s.output);
    if (oracle->parsed()) return report(xshift::run_oracle_check(xshift::prepare(s, w, false), w), s.output);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 2;
  }
  return 2;
}
