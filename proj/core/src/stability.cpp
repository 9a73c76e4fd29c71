#include "g2p/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "g2p/error.hpp"
#include "g2p/lp.hpp"
#include "g2p/policy.hpp"

namespace g2p {

namespace {

// (to, weight) edges of the lane-set routing graph.
std::vector<std::vector<std::pair<int, double>>> routing_edges(const NetworkGraph& graph, const DemandSpec& demand) {
  std::vector<std::vector<std::pair<int, double>>> out(graph.lane_sets.size());
  std::vector<int> users(graph.lane_sets.size(), 0);
  for (const auto& mv : graph.movements) ++users[mv.in_lane_set];
  for (const auto& mv : graph.movements) {
    double mass = 0.0;
    for (int ls : mv.out_lane_sets) mass += demand.lane_share.at(ls);
    if (mass <= 0.0) continue;
    // A lane set feeding several movements splits its flow evenly between them.
    const double w = 1.0 / users[mv.in_lane_set];
    for (int ls : mv.out_lane_sets) out[mv.in_lane_set].emplace_back(ls, w * demand.lane_share[ls] / mass);
  }
  return out;
}

double source(const DemandSpec& demand, std::size_t ls) {
  return ls < demand.entry_rate.size() ? demand.entry_rate[ls] : 0.0;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

FlowSolution solve_flows(const NetworkGraph& graph, const DemandSpec& demand) {
  const std::size_t n = graph.lane_sets.size();
  const auto edges = routing_edges(graph, demand);
  FlowSolution sol;
  sol.flow.assign(n, 0.0);

  std::vector<int> indegree(n, 0);
  for (const auto& e : edges) {
    for (auto [to, w] : e) ++indegree[to];
  }
  std::vector<int> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) order.push_back(static_cast<int>(i));
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (auto [to, w] : edges[order[k]]) {
      if (--indegree[to] == 0) order.push_back(to);
    }
  }

  auto inflow = [&](const std::vector<double>& f) {
    std::vector<double> next(n);
    for (std::size_t i = 0; i < n; ++i) next[i] = source(demand, i);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto [to, w] : edges[i]) next[to] += f[i] * w;
    }
    return next;
  };

  if (order.size() == n) {
    for (std::size_t i = 0; i < n; ++i) sol.flow[i] = source(demand, i);
    for (int i : order) {
      for (auto [to, w] : edges[i]) sol.flow[to] += sol.flow[i] * w;
    }
  } else {
    sol.acyclic = false;
    constexpr int kMaxIterations = 100000;
    for (; sol.iterations < kMaxIterations; ++sol.iterations) {
      auto next = inflow(sol.flow);
      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - sol.flow[i]));
      sol.flow = std::move(next);
      if (change <= 1e-12) break;
    }
    if (sol.iterations == kMaxIterations) throw Error("flow solver did not converge (cyclic routing with gain >= 1)");
  }
  const auto check = inflow(sol.flow);
  for (std::size_t i = 0; i < n; ++i) sol.residual = std::max(sol.residual, std::abs(check[i] - sol.flow[i]));
  if (sol.residual > 1e-9 * std::max(1.0, demand.total_rate())) {
    throw Error("flow solver did not converge (cyclic routing with gain >= 1)");
  }
  return sol;
}

IntersectionFeasibility solve_margin(int n_phases, const std::vector<std::vector<int>>& cover,
                                     std::span<const double> flow, std::span<const double> capacity) {
  // Variables: σ_0..σ_{p-1}, ε⁺, ε⁻.
  const int p = n_phases;
  LinearProgram lp;
  lp.c.assign(p + 2, 0.0);
  lp.c[p] = 1.0;
  lp.c[p + 1] = -1.0;
  std::vector<double> total(p + 2, 0.0);
  std::fill(total.begin(), total.begin() + p, 1.0);
  lp.a.push_back(total);
  lp.b.push_back(1.0);
  for (std::size_t t = 0; t < cover.size(); ++t) {
    std::vector<double> row(p + 2, 0.0);
    if (cover[t].empty()) {
      // Needs no phase: c ≥ f + ε.
      row[p] = 1.0;
      row[p + 1] = -1.0;
      lp.a.push_back(row);
      lp.b.push_back(capacity[t] - flow[t]);
      continue;
    }
    for (int s : cover[t]) row[s] -= capacity[t];
    row[p] = 1.0;
    row[p + 1] = -1.0;
    lp.a.push_back(row);
    lp.b.push_back(-flow[t]);
  }
  IntersectionFeasibility r;
  if (cover.empty()) {
    r.margin = std::numeric_limits<double>::infinity();
    r.sigma.assign(p, 0.0);
    return r;
  }
  const LpResult res = solve_lp(lp);
  if (res.status != LpStatus::optimal) throw Error("feasibility LP did not reach an optimum");
  r.margin = res.x[p] - res.x[p + 1];
  r.sigma.assign(res.x.begin(), res.x.begin() + p);
  for (std::size_t t = 0; t < cover.size(); ++t) {
    double served = cover[t].empty() ? capacity[t] : 0.0;
    for (int s : cover[t]) served += capacity[t] * r.sigma[s];
    if (served - flow[t] - r.margin <= 1e-7) r.binding.push_back(static_cast<int>(t));
  }
  return r;
}

IntersectionFeasibility solve_intersection(const NetworkGraph& graph, int intersection, std::span<const double> flow,
                                           std::span<const double> capacity) {
  const auto& inter = graph.intersections.at(intersection);
  std::vector<std::vector<int>> cover;
  std::vector<double> f, c;
  for (int m : inter.movements) {
    std::vector<int> phases;
    for (std::size_t s = 0; s < inter.phases.size(); ++s) {
      const auto& mv = inter.phases[s].movements;
      if (mv[0] == m || mv[1] == m) phases.push_back(static_cast<int>(s));
    }
    cover.push_back(std::move(phases));
    f.push_back(flow[m]);
    // A left/straight movement in no phase gets nothing: 0 ≥ f + ε.
    c.push_back(cover.back().empty() && graph.movements[m].turn != Turn::right ? 0.0 : capacity[m]);
  }
  auto r = solve_margin(static_cast<int>(inter.phases.size()), cover, f, c);
  r.intersection = intersection;
  for (const auto& ph : inter.phases) r.phases.push_back(ph.index);
  for (int& b : r.binding) b = inter.movements[b];
  return r;
}

namespace {

std::vector<double> movement_flows(const NetworkGraph& graph, const std::vector<double>& lane_flow) {
  std::vector<int> users(graph.lane_sets.size(), 0);
  for (const auto& mv : graph.movements) ++users[mv.in_lane_set];
  std::vector<double> f(graph.movements.size());
  for (const auto& mv : graph.movements) f[mv.id] = lane_flow[mv.in_lane_set] / users[mv.in_lane_set];
  return f;
}

FeasibilityReport feasibility_from_flows(const NetworkGraph& graph, const std::vector<double>& mflow,
                                         const std::vector<double>& capacity) {
  FeasibilityReport rep;
  rep.margin = std::numeric_limits<double>::infinity();
  for (const auto& inter : graph.intersections) {
    if (inter.is_virtual || inter.movements.empty()) continue;
    for (int m : inter.movements) {
      if (graph.movements[m].turn == Turn::right || rep.uncovered_movement) continue;
      const bool covered = std::any_of(inter.phases.begin(), inter.phases.end(), [&](const Phase& p) {
        return p.movements[0] == m || p.movements[1] == m;
      });
      if (!covered) rep.uncovered_movement = m;
    }
    rep.intersections.push_back(solve_intersection(graph, inter.id, mflow, capacity));
    rep.margin = std::min(rep.margin, rep.intersections.back().margin);
  }
  for (const auto& i : rep.intersections) {
    if (i.margin <= rep.margin + 1e-9) rep.binding_movements.insert(rep.binding_movements.end(), i.binding.begin(), i.binding.end());
  }
  rep.feasible = rep.margin > kFeasibilityTol && !rep.uncovered_movement;
  return rep;
}

}  // namespace

FeasibilityReport check_feasibility(const NetworkGraph& graph, const DemandSpec& demand, double saturation_flow) {
  const FlowSolution sol = solve_flows(graph, demand);
  const auto service = make_service_model(graph, saturation_flow, demand.period, ServiceDistribution::deterministic);
  auto rep = feasibility_from_flows(graph, movement_flows(graph, sol.flow), service.rate);
  rep.flow = sol.flow;
  return rep;
}

double critical_scale(const NetworkGraph& graph, const DemandSpec& demand, double saturation_flow) {
  const FlowSolution sol = solve_flows(graph, demand);
  const auto base = movement_flows(graph, sol.flow);
  const auto service = make_service_model(graph, saturation_flow, demand.period, ServiceDistribution::deterministic);
  if (std::all_of(base.begin(), base.end(), [](double f) { return f <= 0.0; })) {
    return std::numeric_limits<double>::infinity();
  }
  auto feasible = [&](double lambda) {
    std::vector<double> f(base);
    for (double& v : f) v *= lambda;
    return feasibility_from_flows(graph, f, service.rate).feasible;
  };
  if (!feasible(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (feasible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) return std::numeric_limits<double>::infinity();
  }
  while (hi - lo > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

std::string to_string(DriftVerdict v) {
  switch (v) {
    case DriftVerdict::negative_drift: return "negative_drift";
    case DriftVerdict::inconclusive: return "inconclusive";
    case DriftVerdict::positive_drift: return "positive_drift";
  }
  return "inconclusive";
}

std::string to_string(Boundedness b) { return b == Boundedness::bounded ? "bounded" : "growing"; }

Ols fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 3) throw Error("least-squares fit needs at least 3 points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw Error("least-squares fit needs at least two distinct x values");
  Ols o;
  o.slope = sxy / sxx;
  o.intercept = my - o.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - o.intercept - o.slope * x[i];
    sse += r * r;
  }
  o.slope_se = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  const boost::math::students_t dist(static_cast<double>(n - 2));
  const double tq = boost::math::quantile(boost::math::complement(dist, 0.025));
  o.slope_low = o.slope - tq * o.slope_se;
  o.slope_high = o.slope + tq * o.slope_se;
  return o;
}

DriftReport lyapunov_drift(const NetworkGraph& graph, const DemandSpec& demand, const std::string& policy,
                           const DriftOptions& options) {
  if (options.replications < 30) throw ConfigError("lyapunov_drift needs at least 30 replications");
  if (options.states.empty() && (options.directions < 1 || options.magnitudes.empty())) {
    throw ConfigError("empty drift grid");
  }
  make_policy(policy, 0);  // validates the name before any work starts

  const std::vector<int> incoming = graph.incoming_lane_sets();
  if (incoming.empty()) throw ConfigError("network has no incoming lane sets");

  // Grid of initial states: integer queues summing to each magnitude.
  std::mt19937_64 dir_rng(options.seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<std::vector<double>> directions(std::max(0, options.directions));
  for (auto& d : directions) {
    d.resize(incoming.size());
    double s = 0.0;
    for (double& w : d) s += (w = expo(dir_rng));
    for (double& w : d) w /= s;
  }
  std::vector<std::vector<std::int64_t>> grid = options.states;
  for (const auto& q : grid) {
    if (q.size() != graph.lane_sets.size()) throw ConfigError("drift state does not match the network's lane sets");
  }
  for (double mag : grid.empty() ? options.magnitudes : std::vector<double>{}) {
    for (const auto& d : directions) {
      const auto total = static_cast<std::int64_t>(std::llround(mag));
      std::vector<std::int64_t> q(graph.lane_sets.size(), 0);
      std::vector<std::pair<double, int>> rema;
      std::int64_t used = 0;
      for (std::size_t k = 0; k < incoming.size(); ++k) {
        const double exact = d[k] * static_cast<double>(total);
        q[incoming[k]] = static_cast<std::int64_t>(std::floor(exact));
        used += q[incoming[k]];
        rema.emplace_back(-(exact - std::floor(exact)), static_cast<int>(k));
      }
      std::sort(rema.begin(), rema.end());
      for (std::size_t k = 0; used < total; ++k, ++used) ++q[incoming[rema[k % rema.size()].second]];
      grid.push_back(std::move(q));
    }
  }

  SimConfig cfg = options.config;
  cfg.mode = SimMode::macroscopic;
  cfg.record_trajectory = false;
  cfg.horizon = 2.0 * cfg.timing.action_duration;
  const int reps = options.replications;
  std::vector<std::vector<double>> drift(grid.size(), std::vector<double>(reps));

  auto evaluate = [&](std::size_t point) {
    const auto& q0 = grid[point];
    double before = 0.0;
    for (auto v : q0) before += static_cast<double>(v) * static_cast<double>(v);
    for (int r = 0; r < reps; ++r) {
      SimConfig c = cfg;
      c.seed = splitmix(options.seed ^ splitmix(point * 1000003ULL + static_cast<std::uint64_t>(r)));
      Simulation sim(graph, demand, c);
      sim.set_queues(q0);
      auto pol = make_policy(policy, c.seed);
      const auto decisions = pol->decide(graph, sim.snapshot(), c.timing);
      sim.apply(decisions);
      sim.advance();
      double after = 0.0;
      for (auto v : sim.queues()) after += static_cast<double>(v) * static_cast<double>(v);
      drift[point][r] = after - before;
    }
  };
  const int workers = std::max(1, options.workers);
  if (workers == 1) {
    for (std::size_t p = 0; p < grid.size(); ++p) evaluate(p);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t p = w; p < grid.size(); p += workers) evaluate(p);
      });
    }
    for (auto& t : pool) t.join();
  }

  DriftReport rep;
  std::vector<double> xs, ys;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    DriftSample s;
    for (auto v : grid[p]) s.norm += static_cast<double>(v);
    s.drift = std::accumulate(drift[p].begin(), drift[p].end(), 0.0) / reps;
    for (double d : drift[p]) s.variance += (d - s.drift) * (d - s.drift);
    s.variance /= std::max(1, reps - 1);
    rep.samples.push_back(s);
    for (double d : drift[p]) {
      xs.push_back(s.norm);
      ys.push_back(d);
    }
  }
  rep.observations = xs.size();
  const Ols fit = fit_line(xs, ys);
  rep.intercept = fit.intercept;
  rep.slope = fit.slope;
  rep.slope_low = fit.slope_low;
  rep.slope_high = fit.slope_high;
  if (fit.slope_high < 0.0) {
    rep.verdict = DriftVerdict::negative_drift;
  } else if (fit.slope_low > 0.0) {
    rep.verdict = DriftVerdict::positive_drift;
  }
  return rep;
}

BoundednessReport boundedness_verdict(std::span<const std::int64_t> total_queue, std::size_t min_periods) {
  const std::size_t n = total_queue.size();
  if (n < min_periods || n < 10) {
    throw ConfigError("boundedness needs at least " + std::to_string(std::max<std::size_t>(min_periods, 10)) +
                      " periods, got " + std::to_string(n));
  }
  BoundednessReport rep;
  rep.running_average.resize(n);
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    sum += static_cast<double>(total_queue[t]);
    rep.running_average[t] = sum / static_cast<double>(t + 1);
  }
  const double end = rep.running_average[n - 1];
  const double start = rep.running_average[n - n / 5 - 1];
  const double scale = std::max(std::abs(end), std::abs(start));
  rep.relative_change = scale > 0.0 ? std::abs(end - start) / scale : 0.0;

  const std::size_t half = n / 2;
  std::vector<double> xs, ys;
  for (std::size_t t = half; t < n; ++t) {
    xs.push_back(static_cast<double>(t));
    ys.push_back(static_cast<double>(total_queue[t]));
  }
  const Ols fit = fit_line(xs, ys);
  rep.slope = fit.slope;
  rep.slope_low = fit.slope_low;
  rep.slope_high = fit.slope_high;
  rep.verdict = (rep.relative_change >= 0.05 && fit.slope_low > 0.0) ? Boundedness::growing : Boundedness::bounded;
  return rep;
}

std::vector<std::int64_t> total_queue_from_trajectory(const std::vector<TrajectoryRecord>& records) {
  std::map<double, std::int64_t> by_time;
  for (const auto& r : records) {
    auto& total = by_time[r.time];
    for (const auto& s : r.lane_sets) total += s.queue;
  }
  std::vector<std::int64_t> out;
  out.reserve(by_time.size());
  for (const auto& [t, q] : by_time) out.push_back(q);
  return out;
}

nlohmann::json to_json(const FeasibilityReport& r, const NetworkGraph& graph) {
  nlohmann::json j;
  j["verdict"] = r.feasible ? "feasible" : "infeasible";
  j["margin"] = r.margin;
  nlohmann::json inters = nlohmann::json::array();
  for (const auto& i : r.intersections) {
    nlohmann::json sigma = nlohmann::json::object();
    for (std::size_t k = 0; k < i.phases.size(); ++k) sigma[std::to_string(i.phases[k])] = i.sigma[k];
    nlohmann::json binding = nlohmann::json::array();
    for (int m : i.binding) binding.push_back(m);
    inters.push_back({{"intersection", graph.intersections[i.intersection].name},
                      {"margin", i.margin},
                      {"sigma", sigma},
                      {"binding_movements", binding}});
  }
  j["intersections"] = inters;
  j["binding_movements"] = r.binding_movements;
  if (r.uncovered_movement) {
    j["uncovered_movement"] = *r.uncovered_movement;
  } else {
    j["uncovered_movement"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const DriftReport& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.samples) samples.push_back({{"norm", s.norm}, {"drift", s.drift}, {"variance", s.variance}});
  return {{"verdict", to_string(r.verdict)},
          {"intercept", r.intercept},
          {"slope", r.slope},
          {"slope_ci95", {r.slope_low, r.slope_high}},
          {"epsilon_hat", -r.slope},
          {"observations", r.observations},
          {"samples", samples}};
}

nlohmann::json to_json(const BoundednessReport& r, bool include_series) {
  nlohmann::json j = {{"verdict", to_string(r.verdict)},
                      {"relative_change_last20", r.relative_change},
                      {"slope_last_half", r.slope},
                      {"slope_ci95", {r.slope_low, r.slope_high}},
                      {"final_running_average", r.running_average.empty() ? 0.0 : r.running_average.back()}};
  if (include_series) j["running_average"] = r.running_average;
  return j;
}

}  // namespace g2p
