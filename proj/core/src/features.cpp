#include "g2p/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "g2p/error.hpp"
#include "g2p/policy.hpp"

namespace g2p {

std::array<double, FeatureVector::kSize> FeatureVector::flatten() const {
  std::array<double, kSize> out{};
  auto it = std::copy(phase_onehot.begin(), phase_onehot.end(), out.begin());
  it = std::copy(tm_pressure.begin(), tm_pressure.end(), it);
  it = std::copy(mask.begin(), mask.end(), it);
  std::copy(advanced.begin(), advanced.end(), it);
  return out;
}

namespace {

const Intersection& signalized(const NetworkGraph& graph, int intersection) {
  if (intersection < 0 || static_cast<std::size_t>(intersection) >= graph.intersections.size()) {
    throw TopologyError(std::to_string(intersection), "unknown intersection");
  }
  const auto& inter = graph.intersections[intersection];
  if (inter.is_virtual) throw TopologyError(inter.name, "virtual intersections have no observation");
  return inter;
}

}  // namespace

FeatureVector generalized_state(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection) {
  const auto& inter = signalized(graph, intersection);
  FeatureVector f;
  f.intersection = intersection;
  const int phase = static_cast<std::size_t>(intersection) < snap.current_phase.size()
                        ? snap.current_phase[intersection]
                        : 0;
  if (phase >= 1 && phase <= kMaxPhases) f.phase_onehot[phase - 1] = 1.0;
  for (std::size_t k = 0; k < kMovementSlots.size(); ++k) {
    const auto [side, turn] = kMovementSlots[k];
    const int m = graph.movement_at(inter.id, side, turn);
    if (m < 0) {
      f.mask[k] = 1.0;
      continue;
    }
    f.tm_pressure[k] = static_cast<double>(generalized_tm_pressure(graph, snap, m));
    f.advanced[2 * k] = efficient_pressure(graph, snap, m);
    f.advanced[2 * k + 1] = static_cast<double>(snap.at(graph.movements[m].in_lane_set).running_count);
  }
  return f;
}

RewardSample rewards(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection) {
  const auto& inter = signalized(graph, intersection);
  std::set<int> in_sets;
  for (int m : inter.movements) in_sets.insert(graph.movements[m].in_lane_set);
  std::int64_t in = 0, out = 0;
  for (int ls : in_sets) in += snap.at(ls).queue;
  for (int r : inter.outgoing_roads) {
    for (int ls : graph.roads[r].lane_sets) out += snap.at(ls).queue;
  }
  RewardSample s;
  s.intersection = intersection;
  s.mplight = -static_cast<double>(std::llabs(in - out));
  s.colight = -static_cast<double>(in);
  return s;
}

int argmax_observed_phase(const FeatureVector& f, std::span<const int> available_phases) {
  if (available_phases.empty()) throw ConfigError("cannot select from an empty phase list");
  auto slot_of = [](MovementKey key) {
    const auto it = std::find(kMovementSlots.begin(), kMovementSlots.end(), key);
    return static_cast<std::size_t>(it - kMovementSlots.begin());
  };
  int best = 0;
  double best_score = 0.0;
  for (int p : available_phases) {
    const auto& pair = kStandardPhases.at(p - 1);
    const double score = f.tm_pressure[slot_of(pair[0])] + f.tm_pressure[slot_of(pair[1])];
    if (best == 0 || score > best_score || (score == best_score && p < best)) {
      best = p;
      best_score = score;
    }
  }
  return best;
}

nlohmann::json to_json(const FeatureVector& f) {
  return {{"phase_onehot", f.phase_onehot}, {"tm_pressure", f.tm_pressure}, {"mask", f.mask}, {"advanced", f.advanced}};
}

nlohmann::json to_json(const RewardSample& r) { return {{"mplight", r.mplight}, {"colight", r.colight}}; }

nlohmann::json to_json(const RunMetrics& m) {
  nlohmann::json j;
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
  return j;
}

EnvSession::EnvSession(const NetworkGraph& graph, DemandSpec demand, SimConfig config)
    : graph_(&graph), demand_(std::move(demand)), config_(config) {
  sim_ = std::make_unique<Simulation>(*graph_, demand_, config_);
}

nlohmann::json EnvSession::observation() const {
  const TrafficSnapshot snap = sim_->snapshot();
  nlohmann::json obs = nlohmann::json::object();
  nlohmann::json reward = nlohmann::json::object();
  nlohmann::json phases = nlohmann::json::object();
  for (const auto& inter : graph_->intersections) {
    if (inter.is_virtual) continue;
    obs[inter.name] = to_json(generalized_state(*graph_, snap, inter.id));
    reward[inter.name] = to_json(rewards(*graph_, snap, inter.id));
    nlohmann::json list = nlohmann::json::array();
    for (const auto& p : inter.phases) list.push_back(p.index);
    phases[inter.name] = list;
  }
  nlohmann::json r = {{"v", kProtocolVersion}, {"t", sim_->clock()}, {"done", sim_->done()},
                      {"obs", obs},           {"reward", reward},    {"phases", phases}};
  if (sim_->done()) r["metrics"] = to_json(sim_->metrics());
  return r;
}

nlohmann::json EnvSession::reset() {
  sim_ = std::make_unique<Simulation>(*graph_, demand_, config_);
  return observation();
}

nlohmann::json EnvSession::step(const std::map<std::string, int>& actions) {
  if (sim_->done()) throw ConfigError("episode is done; send reset");
  std::vector<PolicyDecision> decisions;
  for (const auto& [name, phase] : actions) {
    const auto id = graph_->find_intersection(name);
    if (!id || graph_->intersections[*id].is_virtual) throw ConfigError("unknown intersection '" + name + "'");
    const auto& inter = graph_->intersections[*id];
    const bool ok = std::any_of(inter.phases.begin(), inter.phases.end(),
                                [&](const Phase& p) { return p.index == phase; });
    if (!ok) throw ConfigError("phase index " + std::to_string(phase) + " out of range for " + name);
    decisions.push_back(
        PolicyDecision{*id, phase, schedule_transition(sim_->current_phase(*id), phase, config_.timing)});
  }
  sim_->apply(decisions);
  sim_->advance();
  return observation();
}

nlohmann::json EnvSession::handle(const std::string& line) {
  nlohmann::json request;
  auto fail = [&](const std::string& what) {
    return nlohmann::json{{"v", kProtocolVersion}, {"error", what}, {"request", request.is_discarded() ? nlohmann::json(line) : request}};
  };
  request = nlohmann::json::parse(line, nullptr, false);
  if (request.is_discarded()) return fail("malformed JSON");
  if (!request.is_object() || !request.contains("cmd") || !request["cmd"].is_string()) {
    return fail("request needs a string field 'cmd'");
  }
  try {
    const std::string cmd = request["cmd"];
    if (cmd == "reset") return reset();
    if (cmd != "step") return fail("unknown cmd '" + cmd + "'");
    std::map<std::string, int> actions;
    if (request.contains("actions")) {
      const auto& a = request["actions"];
      if (!a.is_object()) return fail("'actions' must be an object");
      for (const auto& [name, v] : a.items()) {
        if (!v.is_number_integer()) return fail("phase for '" + name + "' must be an integer");
        actions[name] = v.get<int>();
      }
    }
    return step(actions);
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

void serve(EnvSession& session, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out << session.handle(line).dump() << '\n' << std::flush;
  }
}

}  // namespace g2p
