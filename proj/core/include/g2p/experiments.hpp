#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "g2p/demand.hpp"
#include "g2p/network.hpp"
#include "g2p/simulation.hpp"
#include "g2p/stability.hpp"

namespace g2p {

/// Everything one experiment needs. See docs/scenario.md for the file format.
struct Scenario {
  std::string name;
  NetworkGraph graph;
  DemandSpec demand;
  SimConfig config;
  std::string policy = "g2p";
};

/// Throws ConfigError naming the file and JSON path of the offending field.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir, const std::string& origin);

/// Horizon override helper: also rescales CityFlow flow end times left open.
void set_horizon(Scenario& s, double horizon);

RunResult run_scenario(const Scenario& s, const std::string& policy, std::uint64_t seed);

/// Every (policy, seed) pair; results are ordered policy-major, seed-minor
/// regardless of `workers`.
std::vector<RunMetrics> run_sweep(const Scenario& s, const std::vector<std::string>& policies,
                                  const std::vector<std::uint64_t>& seeds, int workers);

struct PolicySummary {
  std::string scenario;
  std::string policy;
  int n = 0;
  double mean = 0.0;
  double std = 0.0;
  double best = 0.0;  // lowest average travel time
  bool operator==(const PolicySummary&) const = default;
};

struct PairTest {
  std::string scenario;
  std::string policy_a;
  std::string policy_b;
  double rank_sum = 0.0;
  double p_value = 1.0;
  double p_adjusted = 1.0;  // Bonferroni over all pairs of the table
  bool operator==(const PairTest&) const = default;
};

struct ComparisonTable {
  std::vector<PolicySummary> summaries;
  std::vector<PairTest> tests;
  bool operator==(const ComparisonTable&) const = default;
};

/// Statistics over average travel time, grouped by (scenario, policy) in
/// order of first appearance; every pair of policies is tested.
ComparisonTable compare_runs(const std::vector<RunMetrics>& runs);

const PolicySummary& summary_for(const ComparisonTable& t, const std::string& policy);
const PairTest& test_for(const ComparisonTable& t, const std::string& a, const std::string& b);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string runs_csv(const std::vector<RunMetrics>& runs);
std::string table_csv(const ComparisonTable& t);
std::string pvalues_csv(const ComparisonTable& t);
std::vector<RunMetrics> parse_runs_csv(const std::string& text);
ComparisonTable parse_table_csv(const std::string& table, const std::string& pvalues);
std::string format_table(const ComparisonTable& t);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// Deterministic metrics JSON text (fixed key order, shortest round-trip doubles).
std::string metrics_json(const RunMetrics& m);

struct StabilityOptions {
  int periods = 2000;
  int replications = 30;
  int directions = 8;
  int workers = 1;
  std::uint64_t seed = 1;
  /// Keep the scenario's yellow/all-red; by default the harness runs with no
  /// lost time so the dynamics match the feasibility program.
  bool keep_lost_time = false;
};

struct StabilityBundle {
  std::string scenario;
  std::string policy;
  FeasibilityReport feasibility;
  double critical_scale = 0.0;
  DriftReport drift;
  BoundednessReport boundedness;
  nlohmann::json to_json(const NetworkGraph& graph) const;
};

StabilityBundle run_stability(const Scenario& s, const std::string& policy, const StabilityOptions& options);

}  // namespace g2p
