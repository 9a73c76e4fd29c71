#pragma once

#include <algorithm>

#include "g2p/error.hpp"

namespace g2p {

template <typename Split>
MacroStep step_macroscopic(const NetworkGraph& graph, std::span<const std::int64_t> queue,
                           std::span<const std::int64_t> capacity, std::span<const std::int64_t> arrivals,
                           Split&& split) {
  MacroStep out;
  out.queue.assign(queue.begin(), queue.end());
  out.departures.assign(graph.movements.size(), 0);
  std::vector<std::int64_t> routed;
  for (const auto& mv : graph.movements) {
    const std::int64_t served = std::min(std::max<std::int64_t>(capacity[mv.id], 0), queue[mv.in_lane_set]);
    out.departures[mv.id] = served;
    out.queue[mv.in_lane_set] -= served;
    if (served == 0) continue;
    if (graph.roads[mv.out_road].road_class == RoadClass::exit) {
      out.exited += served;
      continue;
    }
    routed.assign(mv.out_lane_sets.size(), 0);
    split(mv.id, served, std::span<std::int64_t>(routed));
    std::int64_t check = 0;
    for (std::size_t k = 0; k < routed.size(); ++k) {
      out.queue[mv.out_lane_sets[k]] += routed[k];
      check += routed[k];
    }
    if (check != served) throw Error("routing split lost vehicles");
  }
  for (std::size_t ls = 0; ls < out.queue.size(); ++ls) {
    out.queue[ls] += arrivals[ls];
    if (out.queue[ls] < 0) throw Error("negative queue on lane set " + std::to_string(ls));
  }
  return out;
}

}  // namespace g2p
