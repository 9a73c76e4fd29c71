// g2p: run, compare and analyse signal-control experiments.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "g2p/cityflow.hpp"
#include "g2p/error.hpp"
#include "g2p/experiments.hpp"
#include "g2p/features.hpp"
#include "g2p/policy.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

struct Common {
  std::string scenario;
  std::string policy;
  double horizon = 0.0;
  std::string out;
  int workers = 1;
};

g2p::Scenario load(const Common& c) {
  g2p::Scenario s = g2p::load_scenario(c.scenario);
  if (c.horizon > 0.0) g2p::set_horizon(s, c.horizon);
  return s;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    g2p::write_file_atomic(out, text);
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int cmd_run(const Common& c, long long seed, const std::string& trajectory) {
  g2p::Scenario s = load(c);
  s.config.record_trajectory = !trajectory.empty();
  const std::string policy = c.policy.empty() ? s.policy : c.policy;
  const auto r = g2p::run_scenario(s, policy, seed >= 0 ? static_cast<std::uint64_t>(seed) : s.config.seed);
  if (!trajectory.empty()) {
    std::ostringstream log;
    g2p::write_trajectory(log, r.trajectory);
    g2p::write_file_atomic(trajectory, log.str());
  }
  emit(c.out, g2p::metrics_json(r.metrics));
  return kOk;
}

int cmd_compare(const Common& c, int seeds, int first_seed) {
  const g2p::Scenario s = load(c);
  auto policies = split_list(c.policy.empty() ? "g2p,max_pressure,efficient_mp,fixed_time,random" : c.policy);
  if (seeds < 1) throw g2p::ConfigError("--seeds must be >= 1");
  std::vector<std::uint64_t> seed_list;
  for (int i = 0; i < seeds; ++i) seed_list.push_back(static_cast<std::uint64_t>(first_seed + i));
  const auto runs = g2p::run_sweep(s, policies, seed_list, c.workers);
  const auto table = g2p::compare_runs(runs);
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    g2p::write_file_atomic(fs::path(c.out) / "runs.csv", g2p::runs_csv(runs));
    g2p::write_file_atomic(fs::path(c.out) / "table.csv", g2p::table_csv(table));
    g2p::write_file_atomic(fs::path(c.out) / "pvalues.csv", g2p::pvalues_csv(table));
  }
  std::cout << g2p::format_table(table);
  return kOk;
}

int cmd_stability(const Common& c, const g2p::StabilityOptions& opt, const std::string& trajectory) {
  const g2p::Scenario s = load(c);
  const std::string policy = c.policy.empty() ? s.policy : c.policy;
  auto bundle = g2p::run_stability(s, policy, opt);
  auto j = bundle.to_json(s.graph);
  if (!trajectory.empty()) {
    // Re-evaluate boundedness on an externally recorded trajectory log.
    std::ifstream in(trajectory);
    if (!in) throw g2p::ConfigError("cannot open trajectory log " + trajectory);
    const auto series = g2p::total_queue_from_trajectory(g2p::read_trajectory(in));
    j["trajectory_boundedness"] = g2p::to_json(g2p::boundedness_verdict(series), false);
  }
  emit(c.out, j.dump(2) + "\n");
  std::cerr << "feasibility=" << j["verdicts"]["feasibility"].get<std::string>()
            << " drift=" << j["verdicts"]["drift"].get<std::string>()
            << " boundedness=" << j["verdicts"]["boundedness"].get<std::string>() << '\n';
  return kOk;
}

int cmd_serve(const Common& c, long long seed) {
  g2p::Scenario s = load(c);
  if (seed >= 0) s.config.seed = static_cast<std::uint64_t>(seed);
  g2p::EnvSession session(s.graph, s.demand, s.config);
  g2p::serve(session, std::cin, std::cout);
  return kOk;
}

int cmd_validate(const Common& c, const std::string& roadnet) {
  g2p::NetworkGraph g;
  if (!roadnet.empty()) {
    g = g2p::load_cityflow_roadnet(roadnet);
  } else if (!c.scenario.empty()) {
    g = g2p::load_scenario(c.scenario).graph;
  } else {
    throw g2p::ConfigError("validate needs --scenario or --roadnet");
  }
  const auto problems = g2p::validate(g);
  int signalized = 0;
  for (const auto& i : g.intersections) signalized += i.is_virtual ? 0 : 1;
  std::cout << "intersections: " << signalized << " signalized, " << g.intersections.size() - signalized
            << " virtual\nroads: " << g.roads.size() << "\nlane sets: " << g.lane_sets.size()
            << "\nmovements: " << g.movements.size() << '\n';
  for (const auto& p : problems) std::cout << "violation: " << p << '\n';
  std::cout << (problems.empty() ? "ok\n" : "invalid\n");
  return problems.empty() ? kOk : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized max-pressure signal control experiments"};
  app.require_subcommand(1);

  Common common;
  long long seed = -1;
  int seeds = 30;
  int first_seed = 1;
  std::string trajectory;
  std::string roadnet;
  g2p::StabilityOptions stab;

  auto add_common = [&](CLI::App* sub, bool scenario_required) {
    auto* opt = sub->add_option("--scenario", common.scenario, "Scenario file (JSON)");
    if (scenario_required) opt->required();
    sub->add_option("--policy", common.policy, "Policy name (compare: comma-separated list)");
    sub->add_option("--horizon", common.horizon, "Simulated seconds (overrides the scenario)");
    sub->add_option("--out", common.out, "Output file or directory");
    sub->add_option("--workers", common.workers, "Worker threads")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "Run one simulation and write its metrics");
  add_common(run, true);
  run->add_option("--seed", seed, "Seed (defaults to the scenario's)");
  run->add_option("--log-trajectory", trajectory, "Write the per-period trajectory log here");

  auto* compare = app.add_subcommand("compare", "Seed sweep over several policies with rank-sum tests");
  add_common(compare, true);
  compare->add_option("--seeds", seeds, "Number of seeds");
  compare->add_option("--first-seed", first_seed, "First seed of the sweep");

  auto* stability = app.add_subcommand("stability", "Feasibility LP, Lyapunov drift and boundedness verdicts");
  add_common(stability, true);
  stability->add_option("--periods", stab.periods, "Periods simulated for the boundedness verdict");
  stability->add_option("--replications", stab.replications, "Monte-Carlo replications per drift grid point");
  stability->add_option("--directions", stab.directions, "Random directions per drift magnitude");
  stability->add_option("--seed", stab.seed, "Seed");
  stability->add_flag("--keep-lost-time", stab.keep_lost_time, "Keep yellow/all-red in the harness dynamics");
  stability->add_option("--log-trajectory", trajectory, "Also judge boundedness of this trajectory log");

  auto* serve = app.add_subcommand("serve", "Serve the stepping protocol on stdin/stdout");
  add_common(serve, true);
  serve->add_option("--seed", seed, "Seed (defaults to the scenario's)");

  auto* validate = app.add_subcommand("validate", "Check a network for structural problems");
  add_common(validate, false);
  validate->add_option("--roadnet", roadnet, "CityFlow roadnet.json to check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  stab.workers = common.workers;

  try {
    if (*run) return cmd_run(common, seed, trajectory);
    if (*compare) return cmd_compare(common, seeds, first_seed);
    if (*stability) return cmd_stability(common, stab, trajectory);
    if (*serve) return cmd_serve(common, seed);
    if (*validate) return cmd_validate(common, roadnet);
  } catch (const g2p::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const g2p::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kConfigError;
  } catch (const g2p::TopologyError& e) {
    std::cerr << "topology error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
