#include "g2p/pressure.hpp"

#include <algorithm>
#include <string>

#include "g2p/error.hpp"

namespace g2p {

const LaneSetState& TrafficSnapshot::at(int lane_set) const {
  if (lane_set < 0 || static_cast<std::size_t>(lane_set) >= lane_sets.size() ||
      lane_sets[lane_set].lane_set != lane_set) {
    throw MissingStateError("snapshot has no state for lane set " + std::to_string(lane_set));
  }
  return lane_sets[lane_set];
}

TrafficSnapshot TrafficSnapshot::zeros(const NetworkGraph& graph) {
  TrafficSnapshot s;
  s.lane_sets.resize(graph.lane_sets.size());
  for (std::size_t i = 0; i < s.lane_sets.size(); ++i) s.lane_sets[i].lane_set = static_cast<int>(i);
  s.current_phase.assign(graph.intersections.size(), 0);
  return s;
}

namespace {

double lookup(const std::map<int, std::map<int, double>>& table, int movement, int out_lane_set, const char* what) {
  auto m = table.find(movement);
  if (m != table.end()) {
    auto p = m->second.find(out_lane_set);
    if (p != m->second.end()) return p->second;
  }
  throw MissingStateError(std::string("no ") + what + " probability for movement " + std::to_string(movement) +
                          " into lane set " + std::to_string(out_lane_set));
}

std::int64_t outgoing_queue(const NetworkGraph&, const TrafficSnapshot& snap, const TurnMovement& mv) {
  std::int64_t sum = 0;
  for (int ls : mv.out_lane_sets) sum += snap.at(ls).queue;
  return sum;
}

}  // namespace

double TurnProbabilities::full_at(int movement, int out_lane_set) const {
  return lookup(full, movement, out_lane_set, "turn");
}

double TurnProbabilities::truncated_at(int movement, int out_lane_set) const {
  return lookup(truncated, movement, out_lane_set, "truncated turn");
}

double effective_range(double road_max_speed, double vehicle_max_speed, double delta_t) {
  return std::min(road_max_speed, vehicle_max_speed) * delta_t;
}

QueueSplit truncated_queue(std::span<const double> distances, double l_max) {
  QueueSplit out;
  for (double d : distances) {
    if (d <= l_max) {
      ++out.q_plus;
    } else {
      ++out.q_minus;
    }
  }
  return out;
}

double movement_pressure_lane_level(const NetworkGraph& graph, const TrafficSnapshot& snap,
                                    const TurnProbabilities& probs, int movement, int out_lane_set) {
  const auto& mv = graph.movements.at(movement);
  const double p_plus = probs.truncated_at(movement, out_lane_set);
  return p_plus * static_cast<double>(snap.at(mv.in_lane_set).truncated_queue) -
         static_cast<double>(snap.at(out_lane_set).queue);
}

double movement_pressure_beta(const NetworkGraph& graph, const TrafficSnapshot& snap, const TurnProbabilities& probs,
                              int movement, int out_lane_set, double beta) {
  const auto& mv = graph.movements.at(movement);
  const double p = probs.full_at(movement, out_lane_set);
  const double expected = p * static_cast<double>(snap.at(mv.in_lane_set).queue);
  return std::min(expected, beta) - static_cast<double>(snap.at(out_lane_set).queue);
}

double movement_pressure_truncated_beta(const NetworkGraph& graph, const TrafficSnapshot& snap,
                                        const TurnProbabilities& probs, int movement, int out_lane_set) {
  const auto& mv = graph.movements.at(movement);
  const double beta = probs.truncated_at(movement, out_lane_set) * static_cast<double>(snap.at(mv.in_lane_set).truncated_queue);
  return movement_pressure_beta(graph, snap, probs, movement, out_lane_set, beta);
}

std::int64_t generalized_tm_pressure(const NetworkGraph& graph, const TrafficSnapshot& snap, int movement) {
  const auto& mv = graph.movements.at(movement);
  const auto& in = snap.at(mv.in_lane_set);
  return in.queue - in.residual_queue - outgoing_queue(graph, snap, mv);
}

std::int64_t phase_pressure(const NetworkGraph& graph, const TrafficSnapshot& snap, const Phase& phase) {
  return generalized_tm_pressure(graph, snap, phase.movements[0]) +
         generalized_tm_pressure(graph, snap, phase.movements[1]);
}

std::int64_t max_pressure_tm(const NetworkGraph& graph, const TrafficSnapshot& snap, int movement) {
  const auto& mv = graph.movements.at(movement);
  return snap.at(mv.in_lane_set).queue - outgoing_queue(graph, snap, mv);
}

std::int64_t max_pressure_phase(const NetworkGraph& graph, const TrafficSnapshot& snap, const Phase& phase) {
  return max_pressure_tm(graph, snap, phase.movements[0]) + max_pressure_tm(graph, snap, phase.movements[1]);
}

double efficient_pressure(const NetworkGraph& graph, const TrafficSnapshot& snap, int movement) {
  const auto& mv = graph.movements.at(movement);
  const int in_lanes = graph.lane_sets.at(mv.in_lane_set).lane_count;
  int out_lanes = 0;
  for (int ls : mv.out_lane_sets) out_lanes += graph.lane_sets.at(ls).lane_count;
  if (in_lanes <= 0 || out_lanes <= 0) {
    throw TopologyError(std::to_string(movement), "efficient pressure needs positive lane counts for movement");
  }
  return static_cast<double>(snap.at(mv.in_lane_set).queue) / in_lanes -
         static_cast<double>(outgoing_queue(graph, snap, mv)) / out_lanes;
}

double efficient_phase_pressure(const NetworkGraph& graph, const TrafficSnapshot& snap, const Phase& phase) {
  return efficient_pressure(graph, snap, phase.movements[0]) + efficient_pressure(graph, snap, phase.movements[1]);
}

}  // namespace g2p
