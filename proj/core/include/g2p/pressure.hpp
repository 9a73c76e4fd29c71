#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "g2p/network.hpp"

namespace g2p {

/// Queue state of one homogeneous lane set at one instant.
struct LaneSetState {
  int lane_set = -1;  // -1 marks an uncovered entry
  std::int64_t queue = 0;            // Q
  std::int64_t truncated_queue = 0;  // Q+, queued within the effective range
  std::int64_t residual_queue = 0;   // Q-, queued beyond it
  std::int64_t running_count = 0;    // moving vehicles within the effective range

  bool operator==(const LaneSetState&) const = default;
};

/// Network-wide state, indexed by lane set id and intersection id.
struct TrafficSnapshot {
  double time = 0.0;
  std::vector<LaneSetState> lane_sets;
  std::vector<int> current_phase;  // 0 when an intersection has no phase yet

  /// Throws MissingStateError when the lane set is not covered.
  const LaneSetState& at(int lane_set) const;

  /// All-zero snapshot covering every lane set of `graph`.
  static TrafficSnapshot zeros(const NetworkGraph& graph);

  bool operator==(const TrafficSnapshot&) const = default;
};

/// P(L | L_in) per movement over its outgoing lane sets, and optionally the
/// truncated-queue variant P+(L | L_in).
struct TurnProbabilities {
  std::map<int, std::map<int, double>> full;
  std::map<int, std::map<int, double>> truncated;

  double full_at(int movement, int out_lane_set) const;
  double truncated_at(int movement, int out_lane_set) const;
};

/// Farthest distance a vehicle can cover before the next signal change.
double effective_range(double road_max_speed, double vehicle_max_speed, double delta_t);

struct QueueSplit {
  std::int64_t q_plus = 0;
  std::int64_t q_minus = 0;
  bool operator==(const QueueSplit&) const = default;
};

/// Splits queued vehicles by distance to the stop line: within `l_max`
/// (inclusive) and beyond it.
QueueSplit truncated_queue(std::span<const double> distances, double l_max);

/// Lane-level movement pressure P+(L|L_in) * Q+(L_in) - Q(L).
double movement_pressure_lane_level(const NetworkGraph& graph, const TrafficSnapshot& snap,
                                    const TurnProbabilities& probs, int movement, int out_lane_set);

/// min(P(L|L_in) * Q(L_in), beta) - Q(L).
double movement_pressure_beta(const NetworkGraph& graph, const TrafficSnapshot& snap, const TurnProbabilities& probs,
                              int movement, int out_lane_set, double beta);

/// The beta hook instantiated with beta = P+(L|L_in) * Q+(L_in).
double movement_pressure_truncated_beta(const NetworkGraph& graph, const TrafficSnapshot& snap,
                                        const TurnProbabilities& probs, int movement, int out_lane_set);

/// Generalized turn-movement pressure Q(L_in) - Q-(L_in) - sum of Q over the
/// outgoing road's lane sets. Needs no turn probabilities.
std::int64_t generalized_tm_pressure(const NetworkGraph& graph, const TrafficSnapshot& snap, int movement);

/// Sum of generalized TM pressure over the phase's two movements.
std::int64_t phase_pressure(const NetworkGraph& graph, const TrafficSnapshot& snap, const Phase& phase);

/// Classic max-pressure weight of a movement: Q(L_in) - sum of outgoing Q.
std::int64_t max_pressure_tm(const NetworkGraph& graph, const TrafficSnapshot& snap, int movement);
std::int64_t max_pressure_phase(const NetworkGraph& graph, const TrafficSnapshot& snap, const Phase& phase);

/// Per-lane average incoming queue minus per-lane average outgoing queue.
double efficient_pressure(const NetworkGraph& graph, const TrafficSnapshot& snap, int movement);
double efficient_phase_pressure(const NetworkGraph& graph, const TrafficSnapshot& snap, const Phase& phase);

}  // namespace g2p
