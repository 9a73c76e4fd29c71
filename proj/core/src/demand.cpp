#include "g2p/demand.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "g2p/error.hpp"

namespace g2p {

std::int64_t DemandSpec::arrival_bound() const {
  if (rate_bound > 0) return rate_bound;
  double peak = 0.0;
  for (double r : entry_rate) peak = std::max(peak, r);
  return static_cast<std::int64_t>(std::ceil(3.0 * peak)) + 3;
}

DemandSpec DemandSpec::scaled(double factor) const {
  DemandSpec out = *this;
  for (double& r : out.entry_rate) r *= factor;
  if (rate_bound > 0) out.rate_bound = static_cast<std::int64_t>(std::ceil(rate_bound * std::max(1.0, factor)));
  for (auto& f : out.flows) f.interval /= factor;
  return out;
}

double DemandSpec::total_rate() const {
  double s = 0.0;
  for (double r : entry_rate) s += r;
  return s;
}

std::vector<double> lane_shares_from_ratios(const NetworkGraph& graph, const TurnRatios& ratios) {
  std::vector<double> share(graph.lane_sets.size(), 0.0);
  auto weight = [&](Turn t) {
    switch (t) {
      case Turn::left: return ratios.left;
      case Turn::straight: return ratios.straight;
      case Turn::right: return ratios.right;
    }
    return 0.0;
  };
  for (const auto& road : graph.roads) {
    double total = 0.0;
    for (int ls : road.lane_sets) total += weight(graph.lane_sets[ls].direction);
    for (int ls : road.lane_sets) {
      share[ls] = total > 0.0 ? weight(graph.lane_sets[ls].direction) / total
                              : 1.0 / static_cast<double>(road.lane_sets.size());
    }
  }
  return share;
}

namespace {

DemandSpec rate_demand(const NetworkGraph& graph, const TurnRatios& ratios, double period,
                       ArrivalDistribution arrivals, auto&& hourly_for_road) {
  DemandSpec d;
  d.period = period;
  d.arrivals = arrivals;
  d.lane_share = lane_shares_from_ratios(graph, ratios);
  d.entry_rate.assign(graph.lane_sets.size(), 0.0);
  for (int r : graph.entry_roads) {
    const double per_period = hourly_for_road(r) * period / 3600.0;
    for (int ls : graph.roads[r].lane_sets) d.entry_rate[ls] = per_period * d.lane_share[ls];
  }
  return d;
}

}  // namespace

DemandSpec uniform_demand(const NetworkGraph& graph, double per_hour, const TurnRatios& ratios, double period,
                          ArrivalDistribution arrivals) {
  return rate_demand(graph, ratios, period, arrivals, [&](int) { return per_hour; });
}

DemandSpec directional_demand(const NetworkGraph& graph, double ns_per_hour, double ew_per_hour,
                              const TurnRatios& ratios, double period, ArrivalDistribution arrivals) {
  return rate_demand(graph, ratios, period, arrivals, [&](int r) {
    const Road& road = graph.roads[r];
    const Side s = road_side(graph, r, road.end_node);
    return (s == Side::north || s == Side::south) ? ns_per_hour : ew_per_hour;
  });
}

int lane_set_for(const NetworkGraph& graph, int road, int next_road) {
  const Road& r = graph.roads.at(road);
  if (next_road < 0) {
    if (r.lane_sets.empty()) throw TopologyError(r.name, "road has no lane sets");
    return r.lane_sets.front();
  }
  for (int m : graph.intersections.at(r.end_node).movements) {
    const auto& mv = graph.movements[m];
    if (mv.in_road == road && mv.out_road == next_road) return mv.in_lane_set;
  }
  throw TopologyError(r.name + "->" + graph.roads.at(next_road).name, "route uses a turn with no movement");
}

DemandSpec demand_from_flows(const NetworkGraph& graph, const std::vector<FlowEntry>& flows, double period,
                             double horizon) {
  DemandSpec d;
  d.period = period;
  d.arrivals = ArrivalDistribution::poisson;
  d.flows = flows;
  d.entry_rate.assign(graph.lane_sets.size(), 0.0);
  std::vector<double> used(graph.lane_sets.size(), 0.0);
  std::vector<double> road_total(graph.roads.size(), 0.0);
  const double periods = std::max(1.0, horizon / period);

  for (const auto& f : flows) {
    std::vector<int> roads;
    for (const auto& name : f.route) {
      auto id = graph.find_road(name);
      if (!id) throw TopologyError(name, "flow route references undefined road");
      roads.push_back(*id);
    }
    const double end = (f.end_time < 0.0 || f.end_time > horizon) ? horizon : f.end_time;
    if (end < f.start_time) continue;
    const double count = std::floor((end - f.start_time) / f.interval + 1e-9) + 1.0;
    for (std::size_t k = 0; k < roads.size(); ++k) {
      const int next = k + 1 < roads.size() ? roads[k + 1] : -1;
      const int ls = lane_set_for(graph, roads[k], next);
      used[ls] += count;
      road_total[roads[k]] += count;
    }
    const int first = lane_set_for(graph, roads[0], roads.size() > 1 ? roads[1] : -1);
    if (graph.roads[roads[0]].road_class == RoadClass::entry) d.entry_rate[first] += count / periods;
  }

  d.lane_share.assign(graph.lane_sets.size(), 0.0);
  for (const auto& road : graph.roads) {
    for (int ls : road.lane_sets) {
      d.lane_share[ls] = road_total[road.id] > 0.0 ? used[ls] / road_total[road.id]
                                                   : 1.0 / static_cast<double>(road.lane_sets.size());
    }
  }
  if (!flows.empty()) d.vehicle_max_speed = flows.front().max_speed;
  return d;
}

TurnProbabilities routing_probabilities(const NetworkGraph& graph, const DemandSpec& demand) {
  TurnProbabilities p;
  for (const auto& mv : graph.movements) {
    auto& row = p.full[mv.id];
    for (int ls : mv.out_lane_sets) row[ls] = demand.lane_share.at(ls);
  }
  p.truncated = p.full;
  return p;
}

std::int64_t ServiceModel::draw(int movement, std::mt19937_64& rng) const {
  const double c = rate.at(movement);
  if (distribution == ServiceDistribution::deterministic || c <= 0.0) {
    return static_cast<std::int64_t>(std::floor(c + 1e-9));
  }
  const std::int64_t n = bound.at(movement);
  std::binomial_distribution<std::int64_t> dist(n, std::min(1.0, c / static_cast<double>(n)));
  return dist(rng);
}

ServiceModel make_service_model(const NetworkGraph& graph, double saturation_flow, double period,
                                ServiceDistribution distribution) {
  if (!(saturation_flow > 0.0)) throw ConfigError("saturation_flow must be positive");
  ServiceModel s;
  s.distribution = distribution;
  for (const auto& mv : graph.movements) {
    const double c = saturation_flow * graph.lane_sets[mv.in_lane_set].lane_count * period;
    s.rate.push_back(c);
    s.bound.push_back(distribution == ServiceDistribution::deterministic
                          ? static_cast<std::int64_t>(std::floor(c + 1e-9))
                          : 2 * static_cast<std::int64_t>(std::ceil(c)));
  }
  return s;
}

std::int64_t draw_arrivals(ArrivalDistribution dist, double rate, std::int64_t bound, double& carry,
                           std::mt19937_64& rng) {
  if (rate <= 0.0) return 0;
  switch (dist) {
    case ArrivalDistribution::deterministic: {
      carry += rate;
      const auto n = static_cast<std::int64_t>(std::floor(carry + 1e-9));
      carry -= static_cast<double>(n);
      return std::min(n, bound);
    }
    case ArrivalDistribution::poisson: {
      std::poisson_distribution<std::int64_t> p(rate);
      return std::min(p(rng), bound);
    }
    case ArrivalDistribution::binomial: {
      std::binomial_distribution<std::int64_t> b(bound, std::min(1.0, rate / static_cast<double>(bound)));
      return b(rng);
    }
  }
  return 0;
}

}  // namespace g2p
