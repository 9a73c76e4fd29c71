#include "g2p/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "g2p/cityflow.hpp"
#include "g2p/error.hpp"
#include "g2p/policy.hpp"
#include "g2p/stats.hpp"

namespace g2p {

namespace {

// Field access with diagnostics of the form "<file>: /demand/rate_per_hour: expected a number".
class Fields {
 public:
  Fields(const nlohmann::json& j, std::string origin, std::string path)
      : j_(j), origin_(std::move(origin)), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(origin_ + ": " + path_ + (key.empty() ? "" : "/" + key) + ": " + what);
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items()) {
      if (!ok.count(k)) fail(k, "unknown field");
    }
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!j_.contains(key)) {
      if (fallback) return *fallback;
      fail(key, "missing required field");
    }
    const auto& v = j_.at(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(key, "expected a finite number");
    return d;
  }

  int integer(const std::string& key, std::optional<int> fallback = std::nullopt) const {
    if (!j_.contains(key)) {
      if (fallback) return *fallback;
      fail(key, "missing required field");
    }
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }

  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) const {
    if (!j_.contains(key)) {
      if (fallback) return *fallback;
      fail(key, "missing required field");
    }
    const auto& v = j_.at(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }

  Fields child(const std::string& key) const {
    if (!j_.contains(key)) fail(key, "missing required field");
    return Fields(j_.at(key), origin_, path_ + "/" + key);
  }

  const std::string& origin() const { return origin_; }

 private:
  const nlohmann::json& j_;
  std::string origin_;
  std::string path_;
};

ArrivalDistribution parse_arrival(const Fields& f, const std::string& key) {
  const std::string v = f.text(key, "poisson");
  if (v == "poisson") return ArrivalDistribution::poisson;
  if (v == "deterministic") return ArrivalDistribution::deterministic;
  if (v == "binomial") return ArrivalDistribution::binomial;
  f.fail(key, "expected poisson, deterministic or binomial");
}

NetworkGraph parse_network(const Fields& f, const std::filesystem::path& base) {
  const std::string type = f.text("type");
  if (type == "grid") {
    f.allow({"type", "rows", "cols", "lanes_per_direction", "road_length", "max_speed"});
    return build_synthetic_grid(f.integer("rows"), f.integer("cols"), f.integer("lanes_per_direction", 1),
                                f.number("road_length", 300.0), f.number("max_speed", 11.111));
  }
  if (type == "cityflow") {
    f.allow({"type", "roadnet"});
    return load_cityflow_roadnet(base / f.text("roadnet"));
  }
  if (type == "native") {
    f.allow({"type", "file"});
    const auto path = base / f.text("file");
    const std::string text = read_text_file(path);
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError(path.string(), 0, "malformed JSON");
    return network_from_json(j);
  }
  f.fail("type", "expected grid, cityflow or native");
}

struct DemandSource {
  std::vector<FlowEntry> flows;  // non-empty for cityflow demand
  ArrivalDistribution arrivals = ArrivalDistribution::poisson;
  bool spread = true;
};

DemandSpec parse_demand(const Fields& f, const std::filesystem::path& base, const NetworkGraph& g, double period,
                        double horizon, DemandSource& src) {
  const std::string type = f.text("type");
  src.arrivals = parse_arrival(f, "arrival");
  src.spread = f.boolean("spread_arrivals", true);
  TurnRatios ratios;
  if (f.has("turn_ratios")) {
    const Fields r = f.child("turn_ratios");
    r.allow({"left", "straight", "right"});
    ratios.left = r.number("left", ratios.left);
    ratios.straight = r.number("straight", ratios.straight);
    ratios.right = r.number("right", ratios.right);
    if (ratios.left < 0 || ratios.straight < 0 || ratios.right < 0) f.fail("turn_ratios", "ratios must be >= 0");
  }
  DemandSpec d;
  if (type == "uniform") {
    f.allow({"type", "rate_per_hour", "turn_ratios", "arrival", "spread_arrivals", "rate_bound"});
    const double rate = f.number("rate_per_hour");
    if (rate < 0) f.fail("rate_per_hour", "must be >= 0");
    d = uniform_demand(g, rate, ratios, period, src.arrivals);
  } else if (type == "directional") {
    f.allow({"type", "ns_per_hour", "ew_per_hour", "turn_ratios", "arrival", "spread_arrivals", "rate_bound"});
    const double ns = f.number("ns_per_hour"), ew = f.number("ew_per_hour");
    if (ns < 0 || ew < 0) f.fail("", "hourly rates must be >= 0");
    d = directional_demand(g, ns, ew, ratios, period, src.arrivals);
  } else if (type == "cityflow") {
    f.allow({"type", "flow", "arrival", "spread_arrivals", "rate_bound"});
    src.flows = load_cityflow_flow(base / f.text("flow"));
    d = demand_from_flows(g, src.flows, period, horizon);
    d.arrivals = src.arrivals;
  } else {
    f.fail("type", "expected uniform, directional or cityflow");
  }
  d.spread_arrivals = src.spread;
  d.rate_bound = f.integer("rate_bound", 0);
  if (d.rate_bound < 0) f.fail("rate_bound", "must be >= 0");
  return d;
}

}  // namespace

Scenario parse_scenario(const nlohmann::json& j, const std::filesystem::path& base_dir, const std::string& origin) {
  const Fields f(j, origin, "");
  f.allow({"name", "network", "demand", "policy", "timing", "horizon", "mode", "substep", "saturation_flow",
           "jam_spacing", "vehicle_max_speed", "service", "seed"});
  Scenario s;
  s.name = f.text("name");
  if (s.name.empty() || s.name.find_first_of(",\"\n\r") != std::string::npos) {
    f.fail("name", "must be non-empty and free of commas, quotes and newlines");
  }
  s.policy = f.text("policy", "g2p");
  try {
    make_policy(s.policy, 0);
  } catch (const ConfigError&) {
    f.fail("policy", "unknown policy '" + s.policy + "'");
  }
  if (f.has("timing")) {
    const Fields t = f.child("timing");
    t.allow({"action_duration", "yellow", "all_red"});
    s.config.timing.action_duration = t.number("action_duration", s.config.timing.action_duration);
    s.config.timing.yellow = t.number("yellow", s.config.timing.yellow);
    s.config.timing.all_red = t.number("all_red", s.config.timing.all_red);
    try {
      s.config.timing.check();
    } catch (const ConfigError& e) {
      t.fail("", e.what());
    }
  }
  s.config.horizon = f.number("horizon", 3600.0);
  if (!(s.config.horizon > 0)) f.fail("horizon", "must be positive");
  const std::string mode = f.text("mode", "mesoscopic");
  if (mode == "mesoscopic") {
    s.config.mode = SimMode::mesoscopic;
  } else if (mode == "macroscopic") {
    s.config.mode = SimMode::macroscopic;
  } else {
    f.fail("mode", "expected mesoscopic or macroscopic");
  }
  s.config.substep = f.number("substep", 1.0);
  s.config.saturation_flow = f.number("saturation_flow", 0.5);
  if (!(s.config.saturation_flow > 0)) f.fail("saturation_flow", "must be positive");
  s.config.jam_spacing = f.number("jam_spacing", 7.5);
  if (!(s.config.jam_spacing > 0)) f.fail("jam_spacing", "must be positive");
  s.config.vehicle_max_speed = f.number("vehicle_max_speed", 11.111);
  if (!(s.config.vehicle_max_speed > 0)) f.fail("vehicle_max_speed", "must be positive");
  const std::string service = f.text("service", "deterministic");
  if (service == "deterministic") {
    s.config.service = ServiceDistribution::deterministic;
  } else if (service == "binomial") {
    s.config.service = ServiceDistribution::binomial;
  } else {
    f.fail("service", "expected deterministic or binomial");
  }
  const int seed = f.integer("seed", 1);
  if (seed < 0) f.fail("seed", "must be >= 0");
  s.config.seed = static_cast<std::uint64_t>(seed);

  s.graph = parse_network(f.child("network"), base_dir);
  DemandSource src;
  s.demand = parse_demand(f.child("demand"), base_dir, s.graph, s.config.timing.action_duration, s.config.horizon, src);
  if (!src.flows.empty()) {
    s.config.vehicle_max_speed = f.number("vehicle_max_speed", s.demand.vehicle_max_speed);
  } else {
    s.demand.vehicle_max_speed = s.config.vehicle_max_speed;
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), e.byte, e.what());
  }
  return parse_scenario(j, path.parent_path(), path.string());
}

void set_horizon(Scenario& s, double horizon) {
  if (!(horizon > 0)) throw ConfigError("horizon must be positive");
  s.config.horizon = horizon;
  if (s.demand.has_routes()) {
    DemandSpec d = demand_from_flows(s.graph, s.demand.flows, s.demand.period, horizon);
    d.arrivals = s.demand.arrivals;
    d.spread_arrivals = s.demand.spread_arrivals;
    d.rate_bound = s.demand.rate_bound;
    s.demand = std::move(d);
  }
}

RunResult run_scenario(const Scenario& s, const std::string& policy, std::uint64_t seed) {
  auto pol = make_policy(policy, seed);
  SimConfig cfg = s.config;
  cfg.seed = seed;
  RunResult r = run(s.graph, s.demand, *pol, cfg);
  r.metrics.scenario = s.name;
  return r;
}

std::vector<RunMetrics> run_sweep(const Scenario& s, const std::vector<std::string>& policies,
                                  const std::vector<std::uint64_t>& seeds, int workers) {
  for (const auto& p : policies) make_policy(p, 0);
  const std::size_t jobs = policies.size() * seeds.size();
  std::vector<RunMetrics> out(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < jobs;) {
      try {
        SimConfig cfg = s.config;
        cfg.record_trajectory = false;
        auto pol = make_policy(policies[k / seeds.size()], seeds[k % seeds.size()]);
        cfg.seed = seeds[k % seeds.size()];
        RunResult r = run(s.graph, s.demand, *pol, cfg);
        r.metrics.scenario = s.name;
        out[k] = std::move(r.metrics);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(jobs)));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

ComparisonTable compare_runs(const std::vector<RunMetrics>& runs) {
  std::vector<std::pair<std::string, std::string>> groups;
  std::vector<std::vector<double>> values;
  for (const auto& r : runs) {
    const auto key = std::make_pair(r.scenario, r.policy);
    auto it = std::find(groups.begin(), groups.end(), key);
    if (it == groups.end()) {
      groups.push_back(key);
      values.emplace_back();
      it = groups.end() - 1;
    }
    values[it - groups.begin()].push_back(r.avg_travel_time);
  }
  ComparisonTable t;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    PolicySummary s;
    s.scenario = groups[g].first;
    s.policy = groups[g].second;
    s.n = static_cast<int>(values[g].size());
    s.mean = mean(values[g]);
    s.std = stddev(values[g]);
    s.best = *std::min_element(values[g].begin(), values[g].end());
    t.summaries.push_back(s);
  }
  for (std::size_t a = 0; a < groups.size(); ++a) {
    int pairs = 0;
    for (std::size_t b = 0; b < groups.size(); ++b) pairs += groups[b].first == groups[a].first ? 1 : 0;
    pairs = pairs * (pairs - 1) / 2;
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      if (groups[b].first != groups[a].first) continue;
      const auto rs = rank_sum_test(values[a], values[b]);
      t.tests.push_back(PairTest{groups[a].first, groups[a].second, groups[b].second, rs.rank_sum, rs.p_value,
                                 bonferroni(rs.p_value, pairs)});
    }
  }
  return t;
}

const PolicySummary& summary_for(const ComparisonTable& t, const std::string& policy) {
  for (const auto& s : t.summaries) {
    if (s.policy == policy) return s;
  }
  throw ConfigError("no summary for policy " + policy);
}

const PairTest& test_for(const ComparisonTable& t, const std::string& a, const std::string& b) {
  for (const auto& p : t.tests) {
    if ((p.policy_a == a && p.policy_b == b) || (p.policy_a == b && p.policy_b == a)) return p;
  }
  throw ConfigError("no test for " + a + " vs " + b);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParseError("csv", 0, "bad number '" + s + "'");
  return v;
}

long long parse_int(const std::string& s) {
  long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ParseError("csv", 0, "bad integer '" + s + "'");
  return v;
}

std::vector<std::vector<std::string>> split_csv(const std::string& text, std::size_t columns) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != columns) throw ParseError("csv", 0, "expected " + std::to_string(columns) + " columns");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::string runs_csv(const std::vector<RunMetrics>& runs) {
  std::string out =
      "scenario,policy,seed,mode,horizon,avg_travel_time,travel_time_defined,avg_queue_length,throughput,generated,"
      "in_network_at_horizon,reduced_phase_set\n";
  for (const auto& r : runs) {
    out += r.scenario + ',' + r.policy + ',' + std::to_string(r.seed) + ',' + r.mode + ',' + format_double(r.horizon) +
           ',' + format_double(r.avg_travel_time) + ',' + (r.travel_time_defined ? "1" : "0") + ',' +
           format_double(r.avg_queue_length) + ',' + std::to_string(r.throughput) + ',' + std::to_string(r.generated) +
           ',' + std::to_string(r.in_network_at_horizon) + ',' + (r.reduced_phase_set ? "1" : "0") + '\n';
  }
  return out;
}

std::vector<RunMetrics> parse_runs_csv(const std::string& text) {
  std::vector<RunMetrics> out;
  for (const auto& c : split_csv(text, 12)) {
    RunMetrics r;
    r.scenario = c[0];
    r.policy = c[1];
    r.seed = static_cast<std::uint64_t>(parse_int(c[2]));
    r.mode = c[3];
    r.horizon = parse_double(c[4]);
    r.avg_travel_time = parse_double(c[5]);
    r.travel_time_defined = c[6] == "1";
    r.avg_queue_length = parse_double(c[7]);
    r.throughput = parse_int(c[8]);
    r.generated = parse_int(c[9]);
    r.in_network_at_horizon = parse_int(c[10]);
    r.reduced_phase_set = c[11] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

std::string table_csv(const ComparisonTable& t) {
  std::string out = "scenario,policy,n,mean,std,best\n";
  for (const auto& s : t.summaries) {
    out += s.scenario + ',' + s.policy + ',' + std::to_string(s.n) + ',' + format_double(s.mean) + ',' +
           format_double(s.std) + ',' + format_double(s.best) + '\n';
  }
  return out;
}

std::string pvalues_csv(const ComparisonTable& t) {
  std::string out = "scenario,policy_a,policy_b,rank_sum,p_value,p_bonferroni\n";
  for (const auto& p : t.tests) {
    out += p.scenario + ',' + p.policy_a + ',' + p.policy_b + ',' + format_double(p.rank_sum) + ',' +
           format_double(p.p_value) + ',' + format_double(p.p_adjusted) + '\n';
  }
  return out;
}

ComparisonTable parse_table_csv(const std::string& table, const std::string& pvalues) {
  ComparisonTable t;
  for (const auto& c : split_csv(table, 6)) {
    t.summaries.push_back(PolicySummary{c[0], c[1], static_cast<int>(parse_int(c[2])), parse_double(c[3]),
                                        parse_double(c[4]), parse_double(c[5])});
  }
  for (const auto& c : split_csv(pvalues, 6)) {
    t.tests.push_back(PairTest{c[0], c[1], c[2], parse_double(c[3]), parse_double(c[4]), parse_double(c[5])});
  }
  return t;
}

std::string format_table(const ComparisonTable& t) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-14s %4s %12s %10s %12s\n", "scenario", "policy", "n", "mean_tt", "std",
                "best");
  out << line;
  for (const auto& s : t.summaries) {
    std::snprintf(line, sizeof line, "%-24s %-14s %4d %12.3f %10.3f %12.3f\n", s.scenario.c_str(), s.policy.c_str(),
                  s.n, s.mean, s.std, s.best);
    out << line;
  }
  if (!t.tests.empty()) {
    out << '\n';
    std::snprintf(line, sizeof line, "%-14s %-14s %12s %12s\n", "policy_a", "policy_b", "p", "p_bonf");
    out << line;
    for (const auto& p : t.tests) {
      std::snprintf(line, sizeof line, "%-14s %-14s %12.3g %12.3g\n", p.policy_a.c_str(), p.policy_b.c_str(),
                    p.p_value, p.p_adjusted);
      out << line;
    }
  }
  return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    out << content;
    if (!out.flush()) throw Error("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename " + tmp + " to " + path.string() + ": " + ec.message());
}

std::string metrics_json(const RunMetrics& m) {
  nlohmann::ordered_json j;
  j["scenario"] = m.scenario;
  j["policy"] = m.policy;
  j["seed"] = m.seed;
  j["mode"] = m.mode;
  j["horizon"] = m.horizon;
  j["avg_travel_time"] = m.avg_travel_time;
  j["travel_time_defined"] = m.travel_time_defined;
  j["avg_queue_length"] = m.avg_queue_length;
  j["throughput"] = m.throughput;
  j["generated"] = m.generated;
  j["in_network_at_horizon"] = m.in_network_at_horizon;
  j["reduced_phase_set"] = m.reduced_phase_set;
  j["travel_time_convention"] = "vehicles still in the network at the horizon contribute horizon - enter_time";
  return j.dump(2) + "\n";
}

StabilityBundle run_stability(const Scenario& s, const std::string& policy, const StabilityOptions& options) {
  if (options.periods < 500) throw ConfigError("stability runs need at least 500 periods");
  StabilityBundle b;
  b.scenario = s.name;
  b.policy = policy;
  b.feasibility = check_feasibility(s.graph, s.demand, s.config.saturation_flow);
  b.critical_scale = critical_scale(s.graph, s.demand, s.config.saturation_flow);

  SimConfig cfg = s.config;
  cfg.mode = SimMode::macroscopic;
  cfg.seed = options.seed;
  if (!options.keep_lost_time) {
    cfg.timing.yellow = 0.0;
    cfg.timing.all_red = 0.0;
  }
  DriftOptions d;
  d.replications = options.replications;
  d.directions = options.directions;
  d.workers = options.workers;
  d.seed = options.seed;
  d.config = cfg;
  b.drift = lyapunov_drift(s.graph, s.demand, policy, d);

  cfg.horizon = options.periods * cfg.timing.action_duration;
  auto pol = make_policy(policy, options.seed);
  const RunResult r = run(s.graph, s.demand, *pol, cfg);
  b.boundedness = boundedness_verdict(r.total_queue_series, 500);
  return b;
}

nlohmann::json StabilityBundle::to_json(const NetworkGraph& graph) const {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["policy"] = policy;
  j["feasibility"] = g2p::to_json(feasibility, graph);
  j["critical_scale"] = std::isfinite(critical_scale) ? nlohmann::json(critical_scale) : nlohmann::json(nullptr);
  j["drift"] = g2p::to_json(drift);
  j["boundedness"] = g2p::to_json(boundedness, false);
  j["verdicts"] = {{"feasibility", feasibility.feasible ? "feasible" : "infeasible"},
                   {"drift", to_string(drift.verdict)},
                   {"boundedness", to_string(boundedness.verdict)}};
  return j;
}

}  // namespace g2p
