#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "g2p/demand.hpp"
#include "g2p/network.hpp"
#include "g2p/simulation.hpp"

namespace g2p {

/// Stationary flow per lane set, vehicles per period.
struct FlowSolution {
  std::vector<double> flow;
  double residual = 0.0;
  int iterations = 0;
  bool acyclic = true;
};

/// f = d on entry lane sets, f_j = Σ f_i·P(j | i) elsewhere. Solved in
/// topological order when the lane-set graph is acyclic, by fixed-point
/// iteration otherwise (Error on non-convergence).
FlowSolution solve_flows(const NetworkGraph& graph, const DemandSpec& demand);

struct IntersectionFeasibility {
  int intersection = -1;
  double margin = 0.0;
  std::vector<int> phases;     // phase indices
  std::vector<double> sigma;   // activation frequency per entry of `phases`
  std::vector<int> binding;    // movement ids whose constraint is tight
};

struct FeasibilityReport {
  bool feasible = false;
  double margin = 0.0;  // min over intersections
  std::vector<IntersectionFeasibility> intersections;
  std::vector<int> binding_movements;  // at the intersections attaining the min
  /// Set when some left/straight movement is in no phase.
  std::optional<int> uncovered_movement;
  std::vector<double> flow;
};

inline constexpr double kFeasibilityTol = 1e-9;

/// Per intersection: maximize ε s.t. σ ≥ 0, Σσ ≤ 1, c_T·Σ_{s∋T} σ_s ≥ f_T + ε
/// for every movement (right turns: c_T ≥ f_T + ε, they need no phase).
/// c_T is the mean service per period of full green.
FeasibilityReport check_feasibility(const NetworkGraph& graph, const DemandSpec& demand, double saturation_flow);

/// Margin ε of one intersection for given per-movement flows and capacities.
IntersectionFeasibility solve_intersection(const NetworkGraph& graph, int intersection, std::span<const double> flow,
                                           std::span<const double> capacity);

/// The per-intersection program on its own: `cover[T]` lists the positions
/// (0..n_phases-1) of the phases serving movement T; an empty list means the
/// movement needs no phase and is checked as c_T ≥ f_T + ε.
IntersectionFeasibility solve_margin(int n_phases, const std::vector<std::vector<int>>& cover,
                                     std::span<const double> flow, std::span<const double> capacity);

/// Largest demand scale λ with a feasible verdict (bisection to 1e-6 relative).
/// Infinity when demand is zero.
double critical_scale(const NetworkGraph& graph, const DemandSpec& demand, double saturation_flow);

enum class DriftVerdict { negative_drift, inconclusive, positive_drift };
std::string to_string(DriftVerdict v);

struct DriftOptions {
  std::vector<double> magnitudes{10, 50, 100, 500, 1000};
  int directions = 8;
  int replications = 30;
  std::uint64_t seed = 1;
  int workers = 1;
  /// Explicit initial states (one queue per lane set); when given they
  /// replace the magnitudes × directions grid.
  std::vector<std::vector<std::int64_t>> states;
  /// Dynamics used for the one-step transitions; forced to macroscopic.
  SimConfig config;
};

struct DriftSample {
  double norm = 0.0;   // |Q(t)|, L1
  double drift = 0.0;  // mean of |Q(t+1)|² − |Q(t)|² over replications
  double variance = 0.0;
};

struct DriftReport {
  std::vector<DriftSample> samples;  // one per grid point
  std::size_t observations = 0;      // replication-level points in the fit
  double intercept = 0.0;            // q̂
  double slope = 0.0;                // −ε̂
  double slope_low = 0.0;            // 95% interval
  double slope_high = 0.0;
  DriftVerdict verdict = DriftVerdict::inconclusive;
};

/// Monte-Carlo estimate of the one-step drift of Σ Q² under `policy` from
/// initial states scaled along random directions, with an OLS fit against |Q|.
DriftReport lyapunov_drift(const NetworkGraph& graph, const DemandSpec& demand, const std::string& policy,
                           const DriftOptions& options);

enum class Boundedness { bounded, growing };
std::string to_string(Boundedness b);

struct BoundednessReport {
  Boundedness verdict = Boundedness::bounded;
  std::vector<double> running_average;  // (1/T) Σ_{t<T} Σ Q(t)
  double relative_change = 0.0;         // of the running average across the last 20%
  double slope = 0.0;                   // OLS slope of Σ Q over the last half
  double slope_low = 0.0;
  double slope_high = 0.0;
};

/// Needs at least `min_periods` samples (ConfigError otherwise).
BoundednessReport boundedness_verdict(std::span<const std::int64_t> total_queue, std::size_t min_periods = 500);
/// Σ Q per decision tick, summed over every intersection's incoming lane sets.
std::vector<std::int64_t> total_queue_from_trajectory(const std::vector<TrajectoryRecord>& records);

struct Ols {
  double intercept = 0.0;
  double slope = 0.0;
  double slope_se = 0.0;
  double slope_low = 0.0;
  double slope_high = 0.0;
};
/// Ordinary least squares with a two-sided 95% Student-t interval on the slope.
Ols fit_line(std::span<const double> x, std::span<const double> y);

nlohmann::json to_json(const FeasibilityReport& r, const NetworkGraph& graph);
nlohmann::json to_json(const DriftReport& r);
nlohmann::json to_json(const BoundednessReport& r, bool include_series);

}  // namespace g2p
