#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "g2p/cityflow.hpp"
#include "g2p/error.hpp"
#include "g2p/network.hpp"

using namespace g2p;

namespace {

int signalized_count(const NetworkGraph& g) {
  return static_cast<int>(std::count_if(g.intersections.begin(), g.intersections.end(),
                                        [](const Intersection& i) { return !i.is_virtual; }));
}

bool has_violation(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Grid, SingleIntersection) {
  const auto g = build_synthetic_grid(1, 1, 1, 300, 16.67);
  EXPECT_EQ(signalized_count(g), 1);
  EXPECT_EQ(g.entry_roads.size(), 4u);
  EXPECT_EQ(g.exit_roads.size(), 4u);
  EXPECT_TRUE(g.internal_roads.empty());
  const auto& inter = g.intersections[*g.find_intersection("intersection_1_1")];
  EXPECT_EQ(inter.movements.size(), 12u);
  EXPECT_EQ(inter.phases.size(), 8u);
  EXPECT_FALSE(inter.reduced_phase_set);
  EXPECT_TRUE(validate(g).empty());
}

TEST(Grid, TwoByTwoHasFourInternalRoadPairs) {
  const auto g = build_synthetic_grid(2, 2, 1, 300, 11.111);
  EXPECT_EQ(signalized_count(g), 4);
  EXPECT_EQ(g.internal_roads.size(), 8u);
  EXPECT_EQ(g.entry_roads.size(), 8u);
  EXPECT_TRUE(validate(g).empty());
}

TEST(Grid, Corridor) {
  const auto g = build_synthetic_grid(3, 1, 2, 250, 11.111);
  EXPECT_EQ(signalized_count(g), 3);
  EXPECT_EQ(g.internal_roads.size(), 4u);
  for (const auto& ls : g.lane_sets) {
    if (g.roads[ls.road].road_class != RoadClass::exit) EXPECT_EQ(ls.lane_count, 2);
  }
  EXPECT_TRUE(validate(g).empty());
}

TEST(Grid, RejectsBadDimensions) {
  EXPECT_THROW(build_synthetic_grid(0, 2, 1, 300, 10), ConfigError);
  EXPECT_THROW(build_synthetic_grid(2, 2, 0, 300, 10), ConfigError);
  EXPECT_THROW(build_synthetic_grid(2, 2, 1, -1, 10), ConfigError);
}

TEST(Grid, PartitionCoversAllRoadsDisjointly) {
  for (auto [r, c] : {std::pair{1, 1}, {2, 3}, {4, 4}}) {
    const auto g = build_synthetic_grid(r, c, 1, 300, 11.111);
    std::multiset<int> all(g.entry_roads.begin(), g.entry_roads.end());
    all.insert(g.exit_roads.begin(), g.exit_roads.end());
    all.insert(g.internal_roads.begin(), g.internal_roads.end());
    EXPECT_EQ(all.size(), g.roads.size());
    EXPECT_EQ(std::set<int>(all.begin(), all.end()).size(), g.roads.size());
  }
}

TEST(Grid, MovementOutLaneSetsAreTheOutRoadsLaneSets) {
  const auto g = build_synthetic_grid(3, 3, 2, 300, 11.111);
  for (const auto& mv : g.movements) {
    EXPECT_EQ(mv.out_lane_sets, g.roads[mv.out_road].lane_sets);
    EXPECT_EQ(g.lane_sets[mv.in_lane_set].road, mv.in_road);
    EXPECT_NE(g.roads[mv.in_road].start_node, g.roads[mv.out_road].end_node) << "U-turn";
  }
}

TEST(Grid, InternalRoadsConnectTwoSignalizedIntersections) {
  const auto g = build_synthetic_grid(3, 3, 1, 300, 11.111);
  for (int r : g.internal_roads) {
    EXPECT_FALSE(g.intersections[g.roads[r].start_node].is_virtual);
    EXPECT_FALSE(g.intersections[g.roads[r].end_node].is_virtual);
  }
}

TEST(Grid, ExitSideMatchesGeometry) {
  const auto g = build_synthetic_grid(3, 3, 1, 300, 11.111);
  for (const auto& mv : g.movements) {
    EXPECT_EQ(road_side(g, mv.out_road, mv.intersection), exit_side(mv.approach, mv.turn));
  }
}

TEST(Phases, StandardTableIsNonConflicting) {
  for (const auto& p : kStandardPhases) EXPECT_TRUE(non_conflicting(p[0], p[1]));
  EXPECT_FALSE(non_conflicting({Side::north, Turn::straight}, {Side::east, Turn::straight}));
  EXPECT_FALSE(non_conflicting({Side::north, Turn::left}, {Side::north, Turn::right}));
}

TEST(Phases, EveryLeftAndStraightMovementIsCovered) {
  const auto g = build_synthetic_grid(2, 2, 1, 300, 11.111);
  for (const auto& inter : g.intersections) {
    if (inter.is_virtual) continue;
    for (int m : inter.movements) {
      const bool covered = std::any_of(inter.phases.begin(), inter.phases.end(), [&](const Phase& p) {
        return p.movements[0] == m || p.movements[1] == m;
      });
      EXPECT_EQ(covered, g.movements[m].turn != Turn::right);
    }
  }
}

TEST(Validate, ConflictingPhaseIsNamed) {
  auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  auto& inter = g.intersections[*g.find_intersection("intersection_1_1")];
  const int ns = g.movement_at(inter.id, Side::north, Turn::straight);
  const int es = g.movement_at(inter.id, Side::east, Turn::straight);
  inter.phases[2].movements = {ns, es};
  const auto v = validate(g);
  EXPECT_TRUE(has_violation(v, "phase 3 pairs conflicting movements")) << v.size();
}

TEST(Validate, RoadInNoPartitionClass) {
  auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  const int r = g.entry_roads.back();
  g.entry_roads.pop_back();
  const auto v = validate(g);
  EXPECT_TRUE(has_violation(v, "road " + g.roads[r].name + " is in no partition class"));
}

TEST(Validate, DetectsBrokenOutLaneSets) {
  auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  g.movements[0].out_lane_sets.pop_back();
  EXPECT_FALSE(validate(g).empty());
}

TEST(Validate, DetectsMissingPhases) {
  auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  g.intersections[*g.find_intersection("intersection_1_1")].phases.clear();
  EXPECT_FALSE(validate(g).empty());
}

TEST(Builder, ReducedPhaseSetForThreeLegIntersection) {
  NetworkBuilder b;
  const int c = b.add_intersection("c", false, 0, 0);
  const int w = b.add_intersection("w", true, -300, 0);
  const int e = b.add_intersection("e", true, 300, 0);
  const int s = b.add_intersection("s", true, 0, -300);
  const int w_in = b.add_road("w_in", w, c, 11.1, 2, {});
  const int c_w = b.add_road("c_w", c, w, 11.1, 2, {});
  const int e_in = b.add_road("e_in", e, c, 11.1, 2, {});
  const int c_e = b.add_road("c_e", c, e, 11.1, 2, {});
  const int s_in = b.add_road("s_in", s, c, 11.1, 2, {});
  const int c_s = b.add_road("c_s", c, s, 11.1, 2, {});
  b.add_movement(w_in, c_e, Turn::straight, 1);
  b.add_movement(w_in, c_s, Turn::right, 1);
  b.add_movement(e_in, c_w, Turn::straight, 1);
  b.add_movement(e_in, c_s, Turn::left, 1);
  b.add_movement(s_in, c_w, Turn::left, 1);
  b.add_movement(s_in, c_e, Turn::right, 1);
  const auto g = std::move(b).build();
  const auto& inter = g.intersections[c];
  EXPECT_TRUE(inter.reduced_phase_set);
  EXPECT_LT(inter.phases.size(), 8u);
  EXPECT_GE(inter.phases.size(), 1u);
  EXPECT_TRUE(validate(g).empty()) << validate(g).front();
  // S-left has no partner (no N-left, no S-straight) and stays unserved.
  const int s_left = g.movement_at(c, Side::south, Turn::left);
  for (const auto& p : inter.phases) {
    EXPECT_NE(p.movements[0], s_left);
    EXPECT_NE(p.movements[1], s_left);
    EXPECT_GE(p.movements[0], 0);
    EXPECT_GE(p.movements[1], 0);
  }
}

TEST(Builder, UTurnIsAViolation) {
  NetworkBuilder b;
  const int c = b.add_intersection("c", false, 0, 0);
  const int w = b.add_intersection("w", true, -300, 0);
  const int w_in = b.add_road("w_in", w, c, 11.1, 1, {});
  const int c_w = b.add_road("c_w", c, w, 11.1, 1, {});
  b.add_movement(w_in, c_w, Turn::left, 1);
  EXPECT_TRUE(has_violation(validate(std::move(b).build()), "U-turn"));
}

TEST(NativeFormat, RoundTripIsIdentity) {
  for (auto [r, c, l] : {std::tuple{1, 1, 1}, {2, 3, 2}, {3, 3, 1}}) {
    const auto g = build_synthetic_grid(r, c, l, 280, 13.0);
    const auto j = network_to_json(g);
    const auto back = network_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back, g);
  }
}
