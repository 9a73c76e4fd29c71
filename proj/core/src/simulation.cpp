#include "g2p/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "g2p/error.hpp"

namespace g2p {

namespace {

constexpr double kEps = 1e-9;

std::int64_t floor_count(double x) { return static_cast<std::int64_t>(std::floor(x + kEps)); }

}  // namespace

Simulation::Simulation(const NetworkGraph& graph, DemandSpec demand, SimConfig config)
    : graph_(&graph), demand_(std::move(demand)), config_(config), rng_(config.seed) {
  config_.timing.check();
  if (!(config_.horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (!(config_.jam_spacing > 0.0)) throw ConfigError("jam_spacing must be positive");
  const double period = config_.timing.action_duration;
  if (config_.mode == SimMode::mesoscopic) {
    if (!(config_.substep > 0.0)) throw ConfigError("substep must be positive");
    const double k = period / config_.substep;
    if (std::abs(k - std::round(k)) > kEps) throw ConfigError("substep must divide the action duration");
  }
  const std::size_t n_ls = graph.lane_sets.size();
  const std::size_t n_mv = graph.movements.size();
  if (demand_.entry_rate.empty()) demand_.entry_rate.assign(n_ls, 0.0);
  if (demand_.lane_share.empty()) demand_.lane_share = lane_shares_from_ratios(graph, TurnRatios{});
  if (demand_.entry_rate.size() != n_ls || demand_.lane_share.size() != n_ls) {
    throw ConfigError("demand vectors do not match the network's lane sets");
  }
  if (std::abs(demand_.period - period) > kEps) {
    // Rates are per period; rescale when the demand was built for another period.
    for (double& r : demand_.entry_rate) r *= period / demand_.period;
    demand_.period = period;
  }

  service_ = make_service_model(graph, config_.saturation_flow, period, config_.service);
  deterministic_routing_ = demand_.arrivals == ArrivalDistribution::deterministic &&
                           config_.service == ServiceDistribution::deterministic;

  periods_total_ = static_cast<std::int64_t>(std::ceil(config_.horizon / period - kEps));
  phase_.assign(graph.intersections.size(), 0);
  pending_phase_ = phase_;
  green_seconds_.assign(graph.intersections.size(), period);
  active_.assign(n_mv, 0);
  queue_.assign(n_ls, 0);
  arrival_carry_.assign(n_ls, 0.0);
  split_assigned_.resize(n_mv);
  for (const auto& mv : graph.movements) split_assigned_[mv.id].assign(mv.out_lane_sets.size(), 0);
  split_total_.assign(n_mv, 0);
  lane_queue_.resize(n_ls);
  lane_running_.resize(n_ls);
  source_.resize(n_ls);
  runtime_.resize(n_mv);
  flow_next_.assign(demand_.flows.size(), 0);
  last_departures_.assign(n_mv, 0);
  last_capacity_.assign(n_mv, 0);
  incoming_ = graph.incoming_lane_sets();

  // Explicit routes are checked up front so a bad flow fails at load time.
  for (const auto& f : demand_.flows) {
    std::vector<int> roads;
    for (const auto& name : f.route) {
      auto id = graph.find_road(name);
      if (!id) throw TopologyError(name, "flow route references nonexistent road");
      roads.push_back(*id);
    }
    for (std::size_t k = 0; k < roads.size(); ++k) lane_set_for(graph, roads[k], k + 1 < roads.size() ? roads[k + 1] : -1);
  }
}

bool Simulation::done() const { return period_ >= periods_total_; }

double Simulation::lmax(int lane_set) const {
  return effective_range(graph_->lane_sets[lane_set].max_speed, config_.vehicle_max_speed,
                         config_.timing.action_duration);
}

TrafficSnapshot Simulation::snapshot() const {
  const NetworkGraph& g = *graph_;
  TrafficSnapshot s;
  s.time = clock_;
  s.current_phase = phase_;
  s.lane_sets.resize(g.lane_sets.size());
  for (const auto& ls : g.lane_sets) {
    LaneSetState& st = s.lane_sets[ls.id];
    st.lane_set = ls.id;
    if (config_.mode == SimMode::macroscopic) {
      // Capacity-cap surrogate: what one period of green can discharge.
      const std::int64_t cap =
          floor_count(config_.saturation_flow * config_.timing.action_duration) * ls.lane_count;
      st.queue = queue_[ls.id];
      st.truncated_queue = std::min(st.queue, cap);
    } else {
      const double range = lmax(ls.id);
      // Every vehicle on the lane set counts; queued vehicle k sits
      // floor(k / lanes) slots behind the stop line, and a point queue longer
      // than the road backs up at its upstream end.
      const auto queued = static_cast<std::int64_t>(lane_queue_[ls.id].size());
      const std::int64_t rows_in_range = floor_count(range / config_.jam_spacing) + 1;
      st.truncated_queue =
          range >= ls.length ? queued : std::min<std::int64_t>(queued, rows_in_range * ls.lane_count);
      for (int v : lane_running_[ls.id]) {
        if (vehicles_[v].distance_to_stopline <= range) ++st.running_count;
      }
      st.truncated_queue += st.running_count;
      st.queue = queued + static_cast<std::int64_t>(lane_running_[ls.id].size());
    }
    st.residual_queue = st.queue - st.truncated_queue;
  }
  return s;
}

void Simulation::apply(std::span<const PolicyDecision> decisions) {
  const NetworkGraph& g = *graph_;
  for (const auto& d : decisions) {
    if (d.intersection < 0 || static_cast<std::size_t>(d.intersection) >= g.intersections.size()) {
      throw ConfigError("decision for unknown intersection " + std::to_string(d.intersection));
    }
    const auto& inter = g.intersections[d.intersection];
    if (inter.is_virtual) throw ConfigError("decision for virtual intersection " + inter.name);
    const bool known = std::any_of(inter.phases.begin(), inter.phases.end(),
                                   [&](const Phase& p) { return p.index == d.next_phase; });
    if (!known) {
      throw ConfigError("intersection " + inter.name + " has no phase " + std::to_string(d.next_phase));
    }
  }
  for (const auto& d : decisions) pending_phase_[d.intersection] = d.next_phase;
}

void Simulation::begin_period() {
  const NetworkGraph& g = *graph_;
  const double period = config_.timing.action_duration;
  for (const auto& inter : g.intersections) {
    if (inter.is_virtual) continue;
    const int next = pending_phase_[inter.id];
    const bool switching = phase_[inter.id] != 0 && next != phase_[inter.id];
    green_seconds_[inter.id] = period - (switching ? config_.timing.lost_time() : 0.0);
    phase_[inter.id] = next;
  }
  std::fill(active_.begin(), active_.end(), 0);
  for (const auto& inter : g.intersections) {
    if (inter.is_virtual) continue;
    for (int m : inter.movements) {
      if (g.movements[m].turn == Turn::right) active_[m] = 1;
    }
    for (const auto& p : inter.phases) {
      if (p.index != phase_[inter.id]) continue;
      active_[p.movements[0]] = 1;
      active_[p.movements[1]] = 1;
    }
  }
}

std::int64_t Simulation::occupancy(int lane_set) const {
  return static_cast<std::int64_t>(lane_queue_[lane_set].size() + lane_running_[lane_set].size());
}

bool Simulation::movement_active(int movement) const { return active_[movement] != 0; }

std::vector<std::int64_t> Simulation::queues() const {
  if (config_.mode == SimMode::macroscopic) return queue_;
  std::vector<std::int64_t> q(lane_queue_.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = occupancy(static_cast<int>(i));
  return q;
}

void Simulation::set_queues(std::span<const std::int64_t> q) {
  if (config_.mode != SimMode::macroscopic) throw ConfigError("set_queues is only available in macroscopic mode");
  if (q.size() != queue_.size()) throw ConfigError("queue vector size mismatch");
  for (auto v : q) {
    if (v < 0) throw ConfigError("queues must be non-negative");
  }
  queue_.assign(q.begin(), q.end());
}

std::int64_t Simulation::vehicles_in_network() const {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < lane_queue_.size(); ++i) {
    n += static_cast<std::int64_t>(lane_queue_[i].size() + lane_running_[i].size());
  }
  return n;
}

std::int64_t Simulation::vehicles_waiting() const {
  std::int64_t n = 0;
  for (const auto& s : source_) n += static_cast<std::int64_t>(s.size());
  return n;
}

void Simulation::record(const TrafficSnapshot& snap) {
  std::int64_t total = 0;
  for (int ls : incoming_) total += snap.lane_sets[ls].queue;
  total_queue_series_.push_back(total);
  if (!config_.record_trajectory) return;
  const NetworkGraph& g = *graph_;
  for (const auto& inter : g.intersections) {
    if (inter.is_virtual) continue;
    TrajectoryRecord r;
    r.time = snap.time;
    r.intersection = inter.name;
    r.phase = phase_[inter.id];
    for (int m : inter.movements) r.lane_sets.push_back(snap.lane_sets[g.movements[m].in_lane_set]);
    trajectory_.push_back(std::move(r));
  }
}

void Simulation::accumulate_queue_sample() {
  if (incoming_.empty()) return;
  std::int64_t total = 0;
  if (config_.mode == SimMode::macroscopic) {
    for (int ls : incoming_) total += queue_[ls];
  } else {
    for (int ls : incoming_) total += occupancy(ls);
  }
  queue_sample_sum_ += static_cast<double>(total) / static_cast<double>(incoming_.size());
  ++queue_samples_;
}

void Simulation::advance() {
  if (done()) throw Error("simulation already reached its horizon");
  begin_period();
  if (config_.mode == SimMode::macroscopic) {
    advance_macroscopic();
  } else {
    advance_mesoscopic();
  }
  clock_ = static_cast<double>(++period_) * config_.timing.action_duration;
}

void Simulation::advance_macroscopic() {
  const NetworkGraph& g = *graph_;
  const double period = config_.timing.action_duration;
  record(snapshot());

  std::vector<std::int64_t> capacity(g.movements.size(), 0);
  for (const auto& mv : g.movements) {
    const std::int64_t draw = service_.draw(mv.id, rng_);
    if (!movement_active(mv.id)) continue;
    const double green = green_seconds_[mv.intersection];
    capacity[mv.id] = floor_count(static_cast<double>(draw) * green / period);
  }

  auto split = [&](int movement, std::int64_t n, std::span<std::int64_t> out) {
    const auto& outs = g.movements[movement].out_lane_sets;
    if (deterministic_routing_) {
      auto& assigned = split_assigned_[movement];
      for (std::int64_t v = 0; v < n; ++v) {
        const double total = static_cast<double>(++split_total_[movement]);
        std::size_t best = 0;
        double best_gap = -1e300;
        for (std::size_t k = 0; k < outs.size(); ++k) {
          const double gap = demand_.lane_share[outs[k]] * total - static_cast<double>(assigned[k]);
          if (gap > best_gap + kEps) {
            best_gap = gap;
            best = k;
          }
        }
        ++assigned[best];
        ++out[best];
      }
      return;
    }
    std::int64_t remaining = n;
    double mass = 0.0;
    for (int ls : outs) mass += demand_.lane_share[ls];
    for (std::size_t k = 0; k + 1 < outs.size() && remaining > 0; ++k) {
      const double p = mass > 0.0 ? std::clamp(demand_.lane_share[outs[k]] / mass, 0.0, 1.0) : 0.0;
      std::binomial_distribution<std::int64_t> b(remaining, p);
      out[k] = b(rng_);
      remaining -= out[k];
      mass -= demand_.lane_share[outs[k]];
    }
    out[outs.size() - 1] += remaining;
  };

  std::vector<std::int64_t> arrivals(g.lane_sets.size(), 0);
  const std::int64_t bound = demand_.arrival_bound();

  std::int64_t before = 0;
  for (auto q : queue_) before += q;
  macro_vehicle_time_ += static_cast<double>(before) * period;
  accumulate_queue_sample();

  // Service draws, then routing, then arrivals: fixed RNG order.
  MacroStep step = step_macroscopic(g, queue_, capacity, std::vector<std::int64_t>(g.lane_sets.size(), 0), split);
  for (int r : g.entry_roads) {
    for (int ls : g.roads[r].lane_sets) {
      arrivals[ls] = draw_arrivals(demand_.arrivals, demand_.entry_rate[ls], bound, arrival_carry_[ls], rng_);
    }
  }
  for (std::size_t ls = 0; ls < arrivals.size(); ++ls) {
    step.queue[ls] += arrivals[ls];
    generated_ += arrivals[ls];
  }
  queue_ = std::move(step.queue);
  finished_ += step.exited;
  last_departures_ = std::move(step.departures);
  last_capacity_ = std::move(capacity);
}

void Simulation::place_on_road(Vehicle& v, int lane_set, double now) {
  const NetworkGraph& g = *graph_;
  const LaneSet& ls = g.lane_sets[lane_set];
  v.lane_set = lane_set;
  v.distance_to_stopline = ls.length;
  v.speed = std::min(v.speed > 0.0 ? v.speed : demand_.vehicle_max_speed, ls.max_speed);
  const Road& road = g.roads[ls.road];
  if (road.road_class == RoadClass::exit || g.intersections[road.end_node].is_virtual) {
    if (v.distance_to_stopline <= 0.0) {
      v.state = VehicleState::finished;
      v.exit_time = now;
      ++finished_;
      finished_travel_time_ += v.exit_time - v.enter_time;
      return;
    }
    v.state = VehicleState::running;
    lane_running_[lane_set].push_back(v.id);
    return;
  }
  auto& q = lane_queue_[lane_set];
  const double slot = std::floor(static_cast<double>(q.size()) / ls.lane_count) * config_.jam_spacing;
  if (v.distance_to_stopline <= slot) {
    v.state = VehicleState::queued;
    v.distance_to_stopline = slot;
    q.push_back(v.id);
  } else {
    v.state = VehicleState::running;
    lane_running_[lane_set].push_back(v.id);
  }
}

int Simulation::choose_lane_set(int movement, Vehicle& v) {
  const NetworkGraph& g = *graph_;
  const auto& mv = g.movements[movement];
  if (v.explicit_route) {
    ++v.route_pos;
    const int road = v.route[v.route_pos];
    const int next = v.route_pos + 1 < v.route.size() ? v.route[v.route_pos + 1] : -1;
    return lane_set_for(g, road, next);
  }
  v.route.push_back(mv.out_road);
  ++v.route_pos;
  const auto& outs = mv.out_lane_sets;
  if (outs.size() == 1) return outs.front();
  if (deterministic_routing_) {
    auto& assigned = split_assigned_[movement];
    const double total = static_cast<double>(++split_total_[movement]);
    std::size_t best = 0;
    double best_gap = -1e300;
    for (std::size_t k = 0; k < outs.size(); ++k) {
      const double gap = demand_.lane_share[outs[k]] * total - static_cast<double>(assigned[k]);
      if (gap > best_gap + kEps) {
        best_gap = gap;
        best = k;
      }
    }
    ++assigned[best];
    return outs[best];
  }
  double mass = 0.0;
  for (int ls : outs) mass += demand_.lane_share[ls];
  std::uniform_real_distribution<double> u(0.0, mass);
  double x = u(rng_);
  for (int ls : outs) {
    x -= demand_.lane_share[ls];
    if (x < 0.0) return ls;
  }
  return outs.back();
}

void Simulation::spawn(int lane_set, double enter_time) {
  Vehicle v;
  v.id = static_cast<int>(vehicles_.size());
  v.route = {graph_->lane_sets[lane_set].road};
  v.lane_set = lane_set;
  v.enter_time = enter_time;
  v.speed = demand_.vehicle_max_speed;
  vehicles_.push_back(std::move(v));
  source_[lane_set].push_back(vehicles_.back().id);
  ++generated_;
}

void Simulation::spawn_explicit(const FlowEntry& f, double enter_time) {
  const NetworkGraph& g = *graph_;
  Vehicle v;
  v.id = static_cast<int>(vehicles_.size());
  for (const auto& name : f.route) v.route.push_back(*g.find_road(name));
  v.explicit_route = true;
  v.enter_time = enter_time;
  v.speed = f.max_speed;
  v.lane_set = lane_set_for(g, v.route[0], v.route.size() > 1 ? v.route[1] : -1);
  const int ls = v.lane_set;
  vehicles_.push_back(std::move(v));
  source_[ls].push_back(vehicles_.back().id);
  ++generated_;
}

void Simulation::release_sources(double now) {
  const NetworkGraph& g = *graph_;
  for (std::size_t ls = 0; ls < source_.size(); ++ls) {
    auto& buf = source_[ls];
    if (buf.empty()) continue;
    const LaneSet& lane = g.lane_sets[ls];
    const auto storage =
        std::max<std::int64_t>(1, floor_count(lane.length / config_.jam_spacing)) * lane.lane_count;
    while (!buf.empty() && static_cast<std::int64_t>(lane_queue_[ls].size()) < storage) {
      Vehicle& v = vehicles_[buf.front()];
      buf.pop_front();
      place_on_road(v, static_cast<int>(ls), now);
    }
  }
}

void Simulation::advance_mesoscopic() {
  const NetworkGraph& g = *graph_;
  const double period = config_.timing.action_duration;
  const double dt = config_.substep;
  const int substeps = static_cast<int>(std::lround(period / dt));
  record(snapshot());

  for (const auto& mv : g.movements) {
    const std::int64_t draw = service_.draw(mv.id, rng_);
    auto& rt = runtime_[mv.id];
    rt = MovementRuntime{};
    if (!movement_active(mv.id)) {
      last_capacity_[mv.id] = 0;
      continue;
    }
    const double green = green_seconds_[mv.intersection];
    const std::int64_t cap = floor_count(static_cast<double>(draw) * green / period);
    last_capacity_[mv.id] = cap;
    // Vehicles reaching the stop line during green may cross in the same
    // period; the count stays within Q at the period start.
    rt.budget = std::min<std::int64_t>(cap, occupancy(mv.in_lane_set));
    rt.rate_per_second = static_cast<double>(draw) / period;
  }
  std::fill(last_departures_.begin(), last_departures_.end(), 0);

  // Rate-based arrivals: one draw per lane set and period, or per sub-step.
  const std::int64_t bound = demand_.arrival_bound();
  std::vector<std::int64_t> period_arrivals;
  if (!demand_.has_routes() && !demand_.spread_arrivals) {
    period_arrivals.assign(g.lane_sets.size(), 0);
    for (int r : g.entry_roads) {
      for (int ls : g.roads[r].lane_sets) {
        period_arrivals[ls] = draw_arrivals(demand_.arrivals, demand_.entry_rate[ls], bound, arrival_carry_[ls], rng_);
      }
    }
  }
  const std::int64_t sub_bound = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(bound * dt / period)));

  std::vector<std::pair<double, int>> joiners;
  for (int k = 0; k < substeps; ++k) {
    const double t = clock_ + k * dt;

    if (demand_.has_routes()) {
      for (std::size_t fi = 0; fi < demand_.flows.size(); ++fi) {
        const FlowEntry& f = demand_.flows[fi];
        const double end = f.end_time < 0.0 ? config_.horizon : f.end_time;
        while (true) {
          const double when = f.start_time + static_cast<double>(flow_next_[fi]) * f.interval;
          if (when > end + kEps || when >= t + dt - kEps) break;
          spawn_explicit(f, std::max(when, t));
          ++flow_next_[fi];
        }
      }
    } else if (demand_.spread_arrivals) {
      for (int r : g.entry_roads) {
        for (int ls : g.roads[r].lane_sets) {
          const double rate = demand_.entry_rate[ls] * dt / period;
          const auto n = draw_arrivals(demand_.arrivals, rate, sub_bound, arrival_carry_[ls], rng_);
          for (std::int64_t i = 0; i < n; ++i) spawn(ls, t);
        }
      }
    } else if (k == substeps - 1) {
      for (std::size_t ls = 0; ls < period_arrivals.size(); ++ls) {
        for (std::int64_t i = 0; i < period_arrivals[ls]; ++i) spawn(static_cast<int>(ls), t);
      }
    }
    release_sources(t);

    // Movement along roads.
    for (std::size_t ls = 0; ls < lane_running_.size(); ++ls) {
      auto& running = lane_running_[ls];
      if (running.empty()) continue;
      const LaneSet& lane = g.lane_sets[ls];
      const Road& road = g.roads[lane.road];
      const bool sink = g.intersections[road.end_node].is_virtual;
      joiners.clear();
      std::size_t keep = 0;
      for (int id : running) {
        Vehicle& v = vehicles_[id];
        const double before = v.distance_to_stopline;
        v.distance_to_stopline -= v.speed * dt;
        if (sink) {
          if (v.distance_to_stopline <= 0.0) {
            v.state = VehicleState::finished;
            v.exit_time = t + before / v.speed;
            ++finished_;
            finished_travel_time_ += v.exit_time - v.enter_time;
            continue;
          }
        } else {
          joiners.emplace_back(v.distance_to_stopline, id);
          continue;
        }
        running[keep++] = id;
      }
      running.resize(keep);
      if (sink) continue;
      std::sort(joiners.begin(), joiners.end());
      auto& q = lane_queue_[ls];
      for (auto [d, id] : joiners) {
        const double slot =
            std::min(lane.length, std::floor(static_cast<double>(q.size()) / lane.lane_count) * config_.jam_spacing);
        Vehicle& v = vehicles_[id];
        if (d <= slot) {
          v.state = VehicleState::queued;
          v.distance_to_stopline = slot;
          q.push_back(id);
        } else {
          running.push_back(id);
        }
      }
    }

    // Discharge at the stop lines.
    const double now = t + dt;
    for (const auto& mv : g.movements) {
      auto& rt = runtime_[mv.id];
      if (rt.served >= rt.budget) continue;
      if (k * dt < period - green_seconds_[mv.intersection] - kEps) continue;
      auto& q = lane_queue_[mv.in_lane_set];
      rt.credit += rt.rate_per_second * dt;
      if (q.empty()) {
        // An idle stop line banks at most one headway per lane.
        rt.credit = std::min(rt.credit, static_cast<double>(rt.served + g.lane_sets[mv.in_lane_set].lane_count));
        continue;
      }
      std::int64_t n = std::min(floor_count(rt.credit) - rt.served, rt.budget - rt.served);
      n = std::min<std::int64_t>(n, static_cast<std::int64_t>(q.size()));
      for (std::int64_t i = 0; i < n; ++i) {
        const int id = q.front();
        q.pop_front();
        Vehicle& v = vehicles_[id];
        const int next = choose_lane_set(mv.id, v);
        place_on_road(v, next, now);
      }
      rt.served += std::max<std::int64_t>(n, 0);
      last_departures_[mv.id] += std::max<std::int64_t>(n, 0);
    }
    accumulate_queue_sample();
  }
}

RunMetrics Simulation::metrics() const {
  RunMetrics m;
  m.seed = config_.seed;
  m.horizon = clock_;
  m.generated = generated_;
  m.throughput = finished_;
  m.in_network_at_horizon = generated_ - finished_;
  m.avg_queue_length = queue_samples_ > 0 ? queue_sample_sum_ / static_cast<double>(queue_samples_) : 0.0;
  m.mode = config_.mode == SimMode::macroscopic ? "macroscopic" : "mesoscopic";
  for (const auto& i : graph_->intersections) m.reduced_phase_set = m.reduced_phase_set || i.reduced_phase_set;
  if (generated_ == 0) return m;
  m.travel_time_defined = true;
  if (config_.mode == SimMode::macroscopic) {
    // Little's law over queued vehicle-time.
    m.avg_travel_time = macro_vehicle_time_ / static_cast<double>(generated_);
    return m;
  }
  double total = finished_travel_time_;
  for (const auto& v : vehicles_) {
    if (v.state != VehicleState::finished) total += clock_ - v.enter_time;
  }
  m.avg_travel_time = total / static_cast<double>(generated_);
  return m;
}

RunResult run(const NetworkGraph& graph, const DemandSpec& demand, Policy& policy, const SimConfig& config) {
  Simulation sim(graph, demand, config);
  while (!sim.done()) {
    const TrafficSnapshot snap = sim.snapshot();
    const auto decisions = policy.decide(graph, snap, config.timing);
    sim.apply(decisions);
    sim.advance();
  }
  RunResult r;
  r.metrics = sim.metrics();
  r.metrics.policy = std::string(policy.name());
  r.trajectory = sim.trajectory();
  r.total_queue_series = sim.total_queue_series();
  return r;
}

void write_trajectory(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
  for (const auto& r : records) {
    nlohmann::json j;
    j["t"] = r.time;
    j["intersection"] = r.intersection;
    j["phase"] = r.phase;
    nlohmann::json ls = nlohmann::json::array();
    for (const auto& s : r.lane_sets) {
      ls.push_back({s.lane_set, s.queue, s.truncated_queue, s.residual_queue});
    }
    j["lane_sets"] = ls;
    out << j.dump() << '\n';
  }
}

std::vector<TrajectoryRecord> read_trajectory(std::istream& in) {
  std::vector<TrajectoryRecord> out;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t here = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TrajectoryRecord r;
      r.time = j.at("t");
      r.intersection = j.at("intersection");
      r.phase = j.at("phase");
      for (const auto& s : j.at("lane_sets")) {
        LaneSetState st;
        st.lane_set = s.at(0);
        st.queue = s.at(1);
        st.truncated_queue = s.at(2);
        st.residual_queue = s.at(3);
        r.lane_sets.push_back(st);
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("trajectory", here, e.what());
    }
  }
  return out;
}

}  // namespace g2p
