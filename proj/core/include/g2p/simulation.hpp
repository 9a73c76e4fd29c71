#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "g2p/demand.hpp"
#include "g2p/network.hpp"
#include "g2p/policy.hpp"
#include "g2p/pressure.hpp"

namespace g2p {

enum class SimMode : std::uint8_t { macroscopic, mesoscopic };

struct SimConfig {
  SimMode mode = SimMode::mesoscopic;
  SignalTiming timing;
  double horizon = 3600.0;
  /// Mesoscopic sub-step; must divide the action duration.
  double substep = 1.0;
  /// Saturation flow, vehicles per second of green per lane.
  double saturation_flow = 0.5;
  /// Space a queued vehicle occupies, metres.
  double jam_spacing = 7.5;
  /// Vehicle speed used for the effective range.
  double vehicle_max_speed = 11.111;
  ServiceDistribution service = ServiceDistribution::deterministic;
  std::uint64_t seed = 1;
  bool record_trajectory = false;
};

enum class VehicleState : std::uint8_t { waiting, running, queued, finished };

struct Vehicle {
  int id = -1;
  std::vector<int> route;  // road ids; extended on the fly for rate-generated vehicles
  std::size_t route_pos = 0;
  int lane_set = -1;
  double distance_to_stopline = 0.0;
  double speed = 0.0;
  VehicleState state = VehicleState::waiting;
  double enter_time = 0.0;
  double exit_time = -1.0;
  bool explicit_route = false;
};

struct RunMetrics {
  std::string scenario;
  std::string policy;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  double avg_travel_time = 0.0;
  /// False when no vehicle was generated (avg_travel_time is then 0).
  bool travel_time_defined = false;
  double avg_queue_length = 0.0;
  std::int64_t throughput = 0;
  std::int64_t generated = 0;
  std::int64_t in_network_at_horizon = 0;
  bool reduced_phase_set = false;
  std::string mode;

  bool operator==(const RunMetrics&) const = default;
};

/// One decision tick at one intersection.
struct TrajectoryRecord {
  double time = 0.0;
  std::string intersection;
  int phase = 0;
  std::vector<LaneSetState> lane_sets;  // the intersection's incoming lane sets
};

/// Discrete-time engine. The graph must outlive the simulation.
class Simulation {
 public:
  Simulation(const NetworkGraph& graph, DemandSpec demand, SimConfig config);

  const NetworkGraph& graph() const { return *graph_; }
  const SimConfig& config() const { return config_; }
  const DemandSpec& demand() const { return demand_; }
  double clock() const { return clock_; }
  std::int64_t period_index() const { return period_; }
  bool done() const;

  TrafficSnapshot snapshot() const;

  /// Installs the phases for the coming period. Decisions for unknown
  /// intersections or phase indices the intersection does not have throw
  /// ConfigError and leave the state untouched. Intersections without a
  /// decision keep their phase.
  void apply(std::span<const PolicyDecision> decisions);
  /// Runs one action period.
  void advance();

  RunMetrics metrics() const;
  const std::vector<TrajectoryRecord>& trajectory() const { return trajectory_; }
  /// Total incoming-lane queue at the start of every completed period.
  const std::vector<std::int64_t>& total_queue_series() const { return total_queue_series_; }

  /// Q per lane set. Mesoscopic Q counts every vehicle on the lane set,
  /// queued or still approaching.
  std::vector<std::int64_t> queues() const;
  /// Departures per movement during the last period.
  const std::vector<std::int64_t>& last_departures() const { return last_departures_; }
  /// Capacity draw per movement during the last period (C * A after green-time scaling).
  const std::vector<std::int64_t>& last_capacity() const { return last_capacity_; }
  /// Macroscopic mode only: overwrite the queue vector.
  void set_queues(std::span<const std::int64_t> q);

  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  std::int64_t vehicles_generated() const { return generated_; }
  std::int64_t vehicles_finished() const { return finished_; }
  /// Vehicles on roads (running or queued), excluding the source buffers.
  std::int64_t vehicles_in_network() const;
  std::int64_t vehicles_waiting() const;

  int current_phase(int intersection) const { return phase_.at(intersection); }

 private:
  struct MovementRuntime {
    std::int64_t budget = 0;
    std::int64_t served = 0;
    double credit = 0.0;
    double rate_per_second = 0.0;
  };

  void advance_macroscopic();
  void advance_mesoscopic();
  void begin_period();
  bool movement_active(int movement) const;
  std::int64_t occupancy(int lane_set) const;  // queued + running vehicles
  double lmax(int lane_set) const;
  int choose_lane_set(int movement, Vehicle& v);
  void place_on_road(Vehicle& v, int lane_set, double now);
  void spawn(int lane_set, double enter_time);
  void spawn_explicit(const FlowEntry& f, double enter_time);
  void release_sources(double now);
  void record(const TrafficSnapshot& snap);
  void accumulate_queue_sample();

  const NetworkGraph* graph_;
  DemandSpec demand_;
  SimConfig config_;
  ServiceModel service_;
  std::mt19937_64 rng_;
  bool deterministic_routing_ = false;

  double clock_ = 0.0;
  std::int64_t period_ = 0;
  std::int64_t periods_total_ = 0;
  std::vector<int> phase_;              // per intersection
  std::vector<int> pending_phase_;      // installed by apply()
  std::vector<double> green_seconds_;   // per intersection for the current period
  std::vector<char> active_;            // per movement for the current period

  // Macroscopic state.
  std::vector<std::int64_t> queue_;
  std::vector<double> arrival_carry_;
  std::vector<std::vector<std::int64_t>> split_assigned_;  // per movement, per out lane set position
  std::vector<std::int64_t> split_total_;

  // Mesoscopic state.
  std::vector<Vehicle> vehicles_;
  std::vector<std::deque<int>> lane_queue_;
  std::vector<std::vector<int>> lane_running_;
  std::vector<std::deque<int>> source_;
  std::vector<MovementRuntime> runtime_;
  std::vector<std::size_t> flow_next_;  // next spawn index per flow entry

  std::vector<std::int64_t> last_departures_;
  std::vector<std::int64_t> last_capacity_;
  std::vector<int> incoming_;

  std::int64_t generated_ = 0;
  std::int64_t finished_ = 0;
  double finished_travel_time_ = 0.0;
  double queue_sample_sum_ = 0.0;
  std::int64_t queue_samples_ = 0;
  double macro_vehicle_time_ = 0.0;

  std::vector<TrajectoryRecord> trajectory_;
  std::vector<std::int64_t> total_queue_series_;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<TrajectoryRecord> trajectory;
  std::vector<std::int64_t> total_queue_series;
};

/// Decision ticks every action duration, dynamics in between, until the
/// horizon (rounded up to whole periods).
RunResult run(const NetworkGraph& graph, const DemandSpec& demand, Policy& policy, const SimConfig& config);

/// Newline-delimited JSON, one record per decision tick and intersection.
void write_trajectory(std::ostream& out, const std::vector<TrajectoryRecord>& records);
/// Reads the records back (used by the boundedness analysis).
std::vector<TrajectoryRecord> read_trajectory(std::istream& in);

/// Pure form of the macroscopic update for one period: every movement
/// discharges min(capacity, Q) from its incoming lane set; the discharged
/// vehicles are split over the outgoing road's lane sets by `split` (exit
/// roads absorb them) and `arrivals` are added afterwards.
struct MacroStep {
  std::vector<std::int64_t> queue;
  std::vector<std::int64_t> departures;  // per movement
  std::int64_t exited = 0;
};
template <typename Split>
MacroStep step_macroscopic(const NetworkGraph& graph, std::span<const std::int64_t> queue,
                           std::span<const std::int64_t> capacity, std::span<const std::int64_t> arrivals,
                           Split&& split);

}  // namespace g2p

#include "g2p/detail/macro_step.hpp"
