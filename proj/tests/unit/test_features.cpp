#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "g2p/error.hpp"
#include "g2p/features.hpp"
#include "g2p/policy.hpp"
#include "support.hpp"

using namespace g2p;
using namespace g2p::testing;

namespace {

struct Env {
  NetworkGraph graph = build_synthetic_grid(2, 2, 1, 300, 11.111);
  DemandSpec demand = uniform_demand(graph, 500, TurnRatios{}, 10.0, ArrivalDistribution::poisson);
  SimConfig config = [] {
    SimConfig c;
    c.horizon = 600;
    c.seed = 3;
    return c;
  }();
};

NetworkGraph t_junction() {
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
  return std::move(b).build();
}

}  // namespace

TEST(State, SlotsFollowTheFixedOrder) {
  const auto g = build_synthetic_grid(2, 2, 2, 300, 11.111);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const auto snap = random_snapshot(g, rng);
    for (const auto& inter : g.intersections) {
      if (inter.is_virtual) continue;
      const auto f = generalized_state(g, snap, inter.id);
      for (std::size_t k = 0; k < kMovementSlots.size(); ++k) {
        const int m = g.movement_at(inter.id, kMovementSlots[k].first, kMovementSlots[k].second);
        ASSERT_GE(m, 0);
        EXPECT_EQ(f.tm_pressure[k], static_cast<double>(oracle_generalized(g, snap, m)));
        EXPECT_NEAR(f.advanced[2 * k], oracle_efficient(g, snap, m), 1e-12);
        EXPECT_EQ(f.advanced[2 * k + 1], static_cast<double>(snap.at(g.movements[m].in_lane_set).running_count));
        EXPECT_EQ(f.mask[k], 0.0);
      }
      double onehot = 0.0;
      for (double v : f.phase_onehot) onehot += v;
      EXPECT_EQ(onehot, 1.0);
      EXPECT_EQ(f.phase_onehot[snap.current_phase[inter.id] - 1], 1.0);
    }
  }
}

TEST(State, OneHotIsEmptyBeforeFirstActuation) {
  const auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  const auto snap = TrafficSnapshot::zeros(g);
  const auto f = generalized_state(g, snap, *g.find_intersection("intersection_1_1"));
  for (double v : f.phase_onehot) EXPECT_EQ(v, 0.0);
}

TEST(State, MissingMovementsAreMasked) {
  const auto g = t_junction();
  const auto f = generalized_state(g, TrafficSnapshot::zeros(g), *g.find_intersection("c"));
  int masked = 0;
  for (std::size_t k = 0; k < kMovementSlots.size(); ++k) {
    const bool missing = g.movement_at(*g.find_intersection("c"), kMovementSlots[k].first, kMovementSlots[k].second) < 0;
    EXPECT_EQ(f.mask[k], missing ? 1.0 : 0.0);
    if (missing) {
      ++masked;
      EXPECT_EQ(f.tm_pressure[k], 0.0);
    }
  }
  EXPECT_EQ(masked, 6);
}

TEST(State, FlattenLayout) {
  FeatureVector f;
  f.phase_onehot[2] = 1.0;
  f.tm_pressure[0] = 7.0;
  f.mask[11] = 1.0;
  f.advanced[23] = 4.0;
  const auto flat = f.flatten();
  ASSERT_EQ(flat.size(), 56u);
  EXPECT_EQ(flat[2], 1.0);
  EXPECT_EQ(flat[8], 7.0);
  EXPECT_EQ(flat[31], 1.0);
  EXPECT_EQ(flat[55], 4.0);
}

TEST(State, VirtualOrUnknownIntersectionThrows) {
  const auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  const auto snap = TrafficSnapshot::zeros(g);
  int virt = -1;
  for (const auto& i : g.intersections)
    if (i.is_virtual) virt = i.id;
  EXPECT_THROW(generalized_state(g, snap, virt), TopologyError);
  EXPECT_THROW(generalized_state(g, snap, 999), TopologyError);
  EXPECT_THROW(rewards(g, snap, -1), TopologyError);
}

TEST(Rewards, HandExample) {
  const auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  const int c = *g.find_intersection("intersection_1_1");
  auto snap = TrafficSnapshot::zeros(g);
  const auto& n_straight = g.movements[g.movement_at(c, Side::north, Turn::straight)];
  const auto& e_left = g.movements[g.movement_at(c, Side::east, Turn::left)];
  snap.lane_sets[n_straight.in_lane_set].queue = 6;
  snap.lane_sets[e_left.in_lane_set].queue = 3;
  snap.lane_sets[n_straight.out_lane_sets[0]].queue = 2;
  const auto r = rewards(g, snap, c);
  EXPECT_EQ(r.colight, -9.0);
  EXPECT_EQ(r.mplight, -7.0);
}

TEST(Rewards, NeverPositive) {
  const auto g = build_synthetic_grid(3, 3, 1, 300, 11.111);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto snap = random_snapshot(g, rng);
    for (const auto& inter : g.intersections) {
      if (inter.is_virtual) continue;
      const auto r = rewards(g, snap, inter.id);
      EXPECT_LE(r.mplight, 0.0);
      EXPECT_LE(r.colight, 0.0);
    }
  }
}

TEST(State, ObservedArgmaxMatchesG2P) {
  const auto g = build_synthetic_grid(3, 3, 1, 300, 11.111);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const auto snap = random_snapshot(g, rng, 8);
    for (const auto& inter : g.intersections) {
      if (inter.is_virtual) continue;
      std::vector<int> avail;
      for (const auto& p : inter.phases) avail.push_back(p.index);
      const auto f = generalized_state(g, snap, inter.id);
      EXPECT_EQ(argmax_observed_phase(f, avail), g2p_select(g, snap, inter.id, SignalTiming{}).next_phase);
    }
  }
  EXPECT_THROW(argmax_observed_phase(FeatureVector{}, {}), ConfigError);
}

TEST(Session, ReplayReproducesInternalRun) {
  Env e;
  auto policy = make_policy("g2p", 1);
  const auto internal = run(e.graph, e.demand, *policy, e.config).metrics;

  EnvSession session(e.graph, e.demand, e.config);
  auto obs = session.reset();
  int steps = 0;
  while (!obs["done"].get<bool>()) {
    std::map<std::string, int> actions;
    for (auto& [name, o] : obs["obs"].items()) {
      FeatureVector f;
      f.tm_pressure = o["tm_pressure"].get<std::array<double, 12>>();
      actions[name] = argmax_observed_phase(f, obs["phases"][name].get<std::vector<int>>());
    }
    obs = session.step(actions);
    ++steps;
  }
  EXPECT_EQ(steps, 60);
  auto external = session.simulation().metrics();
  external.policy = internal.policy;
  EXPECT_EQ(to_json(external).dump(), to_json(internal).dump());
  EXPECT_EQ(external, internal);
  EXPECT_EQ(obs["metrics"]["throughput"].get<std::int64_t>(), internal.throughput);
}

TEST(Session, BadRequestsLeaveStateUntouched) {
  Env e;
  EnvSession session(e.graph, e.demand, e.config);
  session.reset();
  const auto t0 = session.simulation().clock();
  for (const char* line : {"not json", "[1,2]", R"({"cmd":"fly"})", R"({"cmd":"step","actions":{"nowhere":1}})",
                           R"({"cmd":"step","actions":{"intersection_1_1":9}})",
                           R"({"cmd":"step","actions":{"intersection_1_1":"x"}})", R"({"cmd":"step","actions":3})"}) {
    const auto r = session.handle(line);
    EXPECT_TRUE(r.contains("error")) << line;
    EXPECT_EQ(r["v"], kProtocolVersion);
    EXPECT_EQ(session.simulation().clock(), t0) << line;
  }
  const auto ok = session.handle(R"({"cmd":"step","actions":{"intersection_1_1":2}})");
  ASSERT_FALSE(ok.contains("error")) << ok.dump();
  EXPECT_EQ(ok["t"], t0 + 10.0);
  EXPECT_EQ(session.simulation().current_phase(*e.graph.find_intersection("intersection_1_1")), 2);
}

TEST(Session, StepAfterDoneNeedsReset) {
  Env e;
  e.config.horizon = 20;
  EnvSession session(e.graph, e.demand, e.config);
  session.reset();
  session.step({});
  const auto last = session.step({});
  EXPECT_TRUE(last["done"].get<bool>());
  EXPECT_TRUE(last.contains("metrics"));
  EXPECT_THROW(session.step({}), ConfigError);
  EXPECT_FALSE(session.handle(R"({"cmd":"reset"})").contains("error"));
  EXPECT_FALSE(session.done());
}

TEST(Session, ServeAnswersEveryLine) {
  Env e;
  e.config.horizon = 30;
  EnvSession session(e.graph, e.demand, e.config);
  std::istringstream in("{\"cmd\":\"reset\"}\n\n{\"cmd\":\"step\"}\nbogus\n{\"cmd\":\"step\",\"actions\":{}}\n");
  std::ostringstream out;
  serve(session, in, out);
  std::istringstream lines(out.str());
  std::vector<nlohmann::json> responses;
  for (std::string l; std::getline(lines, l);) responses.push_back(nlohmann::json::parse(l));
  ASSERT_EQ(responses.size(), 4u);
  EXPECT_EQ(responses[0]["t"], 0.0);
  EXPECT_EQ(responses[1]["t"], 10.0);
  EXPECT_TRUE(responses[2].contains("error"));
  EXPECT_EQ(responses[3]["t"], 20.0);
}
