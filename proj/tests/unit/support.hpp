// Shared generators and brute-force oracles for the unit tests.
#pragma once

#include <cstdint>
#include <random>
#include <ostream>
#include <set>
#include <vector>

#include "g2p/network.hpp"
#include "g2p/pressure.hpp"

namespace g2p::testing {

inline TrafficSnapshot random_snapshot(const NetworkGraph& g, std::mt19937_64& rng, int max_queue = 40) {
  TrafficSnapshot s = TrafficSnapshot::zeros(g);
  std::uniform_int_distribution<int> q(0, max_queue);
  for (auto& st : s.lane_sets) {
    st.queue = q(rng);
    st.truncated_queue = std::uniform_int_distribution<std::int64_t>(0, st.queue)(rng);
    st.residual_queue = st.queue - st.truncated_queue;
    st.running_count = std::uniform_int_distribution<std::int64_t>(0, st.truncated_queue)(rng);
  }
  for (const auto& i : g.intersections) {
    if (!i.is_virtual) s.current_phase[i.id] = std::uniform_int_distribution<int>(1, 8)(rng);
  }
  return s;
}

// Probability vector over n outcomes with some exact zeros.
inline std::vector<double> random_distribution(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> p(n);
  double sum = 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : p) {
    v = u(rng) < 0.2 ? 0.0 : u(rng);
    sum += v;
  }
  if (sum == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (auto& v : p) v /= sum;
  return p;
}

// Independent evaluations straight from the definitions.
inline std::int64_t oracle_out_total(const NetworkGraph& g, const TrafficSnapshot& s, int movement) {
  std::int64_t sum = 0;
  for (int ls : g.roads[g.movements[movement].out_road].lane_sets) sum += s.lane_sets[ls].queue;
  return sum;
}

inline std::int64_t oracle_generalized(const NetworkGraph& g, const TrafficSnapshot& s, int movement) {
  const auto& in = s.lane_sets[g.movements[movement].in_lane_set];
  return in.queue - in.residual_queue - oracle_out_total(g, s, movement);
}

inline std::int64_t oracle_max_pressure(const NetworkGraph& g, const TrafficSnapshot& s, int movement) {
  return s.lane_sets[g.movements[movement].in_lane_set].queue - oracle_out_total(g, s, movement);
}

inline double oracle_efficient(const NetworkGraph& g, const TrafficSnapshot& s, int movement) {
  const auto& mv = g.movements[movement];
  double out_q = 0.0, out_lanes = 0.0;
  for (int ls : g.roads[mv.out_road].lane_sets) {
    out_q += static_cast<double>(s.lane_sets[ls].queue);
    out_lanes += g.lane_sets[ls].lane_count;
  }
  return static_cast<double>(s.lane_sets[mv.in_lane_set].queue) / g.lane_sets[mv.in_lane_set].lane_count -
         out_q / out_lanes;
}

// Argmax by exhaustive scan, ties to the lowest phase index.
template <typename Score>
int oracle_argmax(const Intersection& inter, Score score) {
  int best = -1;
  decltype(score(inter.phases.front())) best_v{};
  for (const auto& p : inter.phases) {
    const auto v = score(p);
    if (best < 0 || v > best_v || (v == best_v && p.index < best)) {
      best = p.index;
      best_v = v;
    }
  }
  return best;
}

}  // namespace g2p::testing

namespace g2p {
inline void PrintTo(const LaneSetState& s, std::ostream* os) {
  *os << "{ls " << s.lane_set << " Q " << s.queue << " Q+ " << s.truncated_queue << " Q- " << s.residual_queue
      << " run " << s.running_count << "}";
}
}  // namespace g2p
