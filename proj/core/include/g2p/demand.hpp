#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "g2p/cityflow.hpp"
#include "g2p/network.hpp"
#include "g2p/pressure.hpp"

namespace g2p {

enum class ArrivalDistribution : std::uint8_t { deterministic, poisson, binomial };
enum class ServiceDistribution : std::uint8_t { deterministic, binomial };

/// Share of traffic turning each way at a signalized intersection.
struct TurnRatios {
  double left = 0.25;
  double straight = 0.6;
  double right = 0.15;
};

/// Exogenous load of a scenario. Rates are vehicles per period; a period is
/// `period` seconds (the action duration).
struct DemandSpec {
  double period = 10.0;
  /// Per lane set; non-zero only on lane sets of entry roads.
  std::vector<double> entry_rate;
  /// Per lane set: fraction of the vehicles entering its road that join it.
  /// Sums to 1 over the lane sets of each road.
  std::vector<double> lane_share;
  /// Per-lane-set bound on arrivals in one period; 0 derives one from the rates.
  std::int64_t rate_bound = 0;
  ArrivalDistribution arrivals = ArrivalDistribution::poisson;
  /// Mesoscopic mode: spread a period's arrivals over its sub-steps instead of
  /// releasing them at the period's last sub-step.
  bool spread_arrivals = true;
  /// Vehicles with explicit routes (CityFlow flow entries). When non-empty the
  /// mesoscopic engine spawns these instead of rate-based arrivals.
  std::vector<FlowEntry> flows;
  /// Speed of rate-generated vehicles.
  double vehicle_max_speed = 11.111;

  bool has_routes() const { return !flows.empty(); }
  /// Effective per-lane-set arrival bound.
  std::int64_t arrival_bound() const;
  /// Same demand with every rate multiplied by `factor`.
  DemandSpec scaled(double factor) const;
  double total_rate() const;
};

/// `per_hour` vehicles per hour on every entry road, split across its lane
/// sets by `ratios`; internal roads use the same ratios.
DemandSpec uniform_demand(const NetworkGraph& graph, double per_hour, const TurnRatios& ratios, double period,
                          ArrivalDistribution arrivals);

/// As uniform_demand, with separate hourly rates for roads entering from the
/// north/south and from the east/west boundaries.
DemandSpec directional_demand(const NetworkGraph& graph, double ns_per_hour, double ew_per_hour,
                              const TurnRatios& ratios, double period, ArrivalDistribution arrivals);

/// Lane shares from turn ratios, renormalised over the lane sets each road has.
std::vector<double> lane_shares_from_ratios(const NetworkGraph& graph, const TurnRatios& ratios);

/// Rates and routing proportions implied by explicit-route flows, obtained by
/// counting how often routes use each lane set. Flows must reference roads
/// that exist and consecutive roads must form movements.
DemandSpec demand_from_flows(const NetworkGraph& graph, const std::vector<FlowEntry>& flows, double period,
                             double horizon);

/// Lane set used on `road` by a vehicle whose next road is `next_road`
/// (-1 when `road` is the last one). Throws TopologyError when no movement
/// joins the two roads.
int lane_set_for(const NetworkGraph& graph, int road, int next_road);

/// P(L | L_in) = lane_share[L] for every movement; the truncated variant is
/// set equal to it.
TurnProbabilities routing_probabilities(const NetworkGraph& graph, const DemandSpec& demand);

/// Per-movement service: mean c (vehicles per period of full green) and the
/// bound C̄.
struct ServiceModel {
  std::vector<double> rate;
  std::vector<std::int64_t> bound;
  ServiceDistribution distribution = ServiceDistribution::deterministic;

  /// One draw of C for `movement`.
  std::int64_t draw(int movement, std::mt19937_64& rng) const;
};

/// c = saturation_flow (veh/s/lane) * lanes * period.
ServiceModel make_service_model(const NetworkGraph& graph, double saturation_flow, double period,
                                ServiceDistribution distribution);

/// Draws the number of arrivals for one interval with mean `rate`.
std::int64_t draw_arrivals(ArrivalDistribution dist, double rate, std::int64_t bound, double& carry,
                           std::mt19937_64& rng);

}  // namespace g2p
