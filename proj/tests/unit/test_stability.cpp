#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "g2p/error.hpp"
#include "g2p/policy.hpp"
#include "g2p/stability.hpp"

using namespace g2p;

namespace {

double exit_flow(const NetworkGraph& g, const FlowSolution& f) {
  double s = 0.0;
  for (int r : g.exit_roads)
    for (int ls : g.roads[r].lane_sets) s += f.flow[ls];
  return s;
}

// Feasibility margin of a symmetric single intersection with uniform demand r
// per entry road: the 8 left/straight movements share 2c of service per period
// (each phase serves two of them), so ε = c/4 - (f_s + f_l)/2, unless the
// always-green right turns bind first at c - f_r.
double symmetric_margin(double c, double r, const TurnRatios& tr) {
  return std::min(c / 4.0 - (tr.straight + tr.left) * r / 2.0, c - tr.right * r);
}

SimConfig deterministic_macro() {
  SimConfig c;
  c.mode = SimMode::macroscopic;
  c.timing = SignalTiming{10, 0, 0};
  return c;
}

}  // namespace

TEST(Flows, EvenSplitIntoTwoLaneSets) {
  const auto g = build_synthetic_grid(1, 2, 1, 300, 11.111);
  const int west = *g.find_intersection("intersection_1_1");
  const int m = g.movement_at(west, Side::west, Turn::straight);
  const auto& mv = g.movements[m];
  DemandSpec d;
  d.entry_rate.assign(g.lane_sets.size(), 0.0);
  d.entry_rate[mv.in_lane_set] = 6.0;
  d.lane_share = lane_shares_from_ratios(g, TurnRatios{});
  for (int ls : mv.out_lane_sets) d.lane_share[ls] = 0.0;
  d.lane_share[mv.out_lane_sets[0]] = 0.5;
  d.lane_share[mv.out_lane_sets[1]] = 0.5;
  const auto f = solve_flows(g, d);
  EXPECT_NEAR(f.flow[mv.out_lane_sets[0]], 3.0, 1e-12);
  EXPECT_NEAR(f.flow[mv.out_lane_sets[1]], 3.0, 1e-12);
  EXPECT_NEAR(f.flow[mv.out_lane_sets[2]], 0.0, 1e-12);
  EXPECT_LE(f.residual, 1e-9);
}

TEST(Flows, CorridorPassThrough) {
  const auto g = build_synthetic_grid(1, 4, 1, 300, 11.111);
  const TurnRatios straight_only{0.0, 1.0, 0.0};
  auto d = uniform_demand(g, 0, straight_only, 10.0, ArrivalDistribution::poisson);
  const int first = *g.find_intersection("intersection_1_1");
  const int m = g.movement_at(first, Side::west, Turn::straight);
  d.entry_rate[g.movements[m].in_lane_set] = 2.5;
  const auto f = solve_flows(g, d);
  int internal_seen = 0;
  for (int r : g.internal_roads) {
    for (int ls : g.roads[r].lane_sets) {
      if (g.lane_sets[ls].direction != Turn::straight) continue;
      const Side s = road_side(g, r, g.roads[r].end_node);
      if (s == Side::west) {
        EXPECT_NEAR(f.flow[ls], 2.5, 1e-12);
        ++internal_seen;
      }
    }
  }
  EXPECT_EQ(internal_seen, 3);
  EXPECT_NEAR(exit_flow(g, f), 2.5, 1e-12);
}

TEST(Flows, RandomRoutingConservesFlow) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int rows = 1 + trial % 3, cols = 1 + (trial / 3) % 3;
    const auto g = build_synthetic_grid(rows, cols, 1 + trial % 2, 300, 11.111);
    const TurnRatios tr{u(rng), u(rng), u(rng)};
    auto d = uniform_demand(g, 0, tr, 10.0, ArrivalDistribution::poisson);
    double entry = 0.0;
    for (int r : g.entry_roads)
      for (int ls : g.roads[r].lane_sets) entry += (d.entry_rate[ls] = u(rng) * 3.0);
    const auto f = solve_flows(g, d);
    EXPECT_NEAR(exit_flow(g, f), entry, 1e-9 * std::max(1.0, entry));
    for (double v : f.flow) EXPECT_GE(v, 0.0);
    EXPECT_LE(f.residual, 1e-9 * std::max(1.0, entry));
  }
}

TEST(Flows, EndlessLoopDoesNotConverge) {
  // Straight in from the west, then right turns forever around the block.
  const auto g = build_synthetic_grid(2, 2, 1, 300, 11.111);
  DemandSpec d;
  d.entry_rate.assign(g.lane_sets.size(), 0.0);
  d.lane_share = lane_shares_from_ratios(g, TurnRatios{0.0, 0.0, 1.0});
  const int corner = *g.find_intersection("intersection_1_1");
  d.entry_rate[g.movements[g.movement_at(corner, Side::west, Turn::straight)].in_lane_set] = 1.0;
  EXPECT_THROW(solve_flows(g, d), Error);
}

TEST(Margin, TwoExclusivePhases) {
  const std::vector<std::vector<int>> cover{{0}, {1}};
  const std::vector<double> cap{10, 10};
  auto r = solve_margin(2, cover, std::vector<double>{4, 4}, cap);
  EXPECT_NEAR(r.margin, 1.0, 1e-9);
  ASSERT_EQ(r.sigma.size(), 2u);
  EXPECT_NEAR(r.sigma[0], 0.5, 1e-9);
  EXPECT_NEAR(r.sigma[1], 0.5, 1e-9);
  r = solve_margin(2, cover, std::vector<double>{6, 6}, cap);
  EXPECT_NEAR(r.margin, -1.0, 1e-9);
  r = solve_margin(2, cover, std::vector<double>{0, 0}, cap);
  EXPECT_NEAR(r.margin, 5.0, 1e-9);
}

TEST(Margin, AsymmetricTwoPhaseHandSolution) {
  // 10 σ1 >= 2 + ε, 20 σ2 >= 9 + ε, σ1 + σ2 <= 1  ->  σ1 = (2+ε)/10, σ2 = (9+ε)/20,
  // (2+ε)/10 + (9+ε)/20 = 1  ->  3ε = 7  ->  ε = 7/3.
  const auto r = solve_margin(2, {{0}, {1}}, std::vector<double>{2, 9}, std::vector<double>{10, 20});
  EXPECT_NEAR(r.margin, 7.0 / 3.0, 1e-9);
  EXPECT_NEAR(r.sigma[0] + r.sigma[1], 1.0, 1e-9);
}

TEST(Margin, PhaselessMovementOnlyNeedsCapacity) {
  const auto r = solve_margin(1, {{0}, {}}, std::vector<double>{1, 4}, std::vector<double>{10, 5});
  EXPECT_NEAR(r.margin, 1.0, 1e-9);
}

TEST(Margin, SigmaStaysInTheSimplex) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<int>> cover{{0, 4}, {1, 4}, {2}, {3}, {0}, {1, 2}};
    std::vector<double> flow(6), cap(6);
    for (int k = 0; k < 6; ++k) {
      flow[k] = u(rng);
      cap[k] = 5 + u(rng);
    }
    const auto r = solve_margin(5, cover, flow, cap);
    double sum = 0.0;
    for (double s : r.sigma) {
      EXPECT_GE(s, -1e-12);
      sum += s;
    }
    EXPECT_LE(sum, 1.0 + 1e-9);
    for (int k = 0; k < 6; ++k) {
      double served = 0.0;
      for (int p : cover[k]) served += r.sigma[p];
      EXPECT_GE(cap[k] * served, flow[k] + r.margin - 1e-7);
    }
    // No sampled σ beats the optimum.
    std::exponential_distribution<double> e(1.0);
    for (int s = 0; s < 200; ++s) {
      std::vector<double> sig(5);
      double tot = 0.0;
      for (auto& v : sig) tot += (v = e(rng));
      double eps = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 6; ++k) {
        double served = 0.0;
        for (int p : cover[k]) served += sig[p] / tot;
        eps = std::min(eps, cap[k] * served - flow[k]);
      }
      EXPECT_LE(eps, r.margin + 1e-9);
    }
  }
}

TEST(Feasibility, SymmetricIntersectionMatchesClosedForm) {
  const auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  const TurnRatios tr{};
  for (double per_hour : {0.0, 300.0, 600.0, 1200.0, 2000.0}) {
    const auto d = uniform_demand(g, per_hour, tr, 10.0, ArrivalDistribution::poisson);
    const auto rep = check_feasibility(g, d, 0.5);
    const double expect = symmetric_margin(5.0, per_hour * 10.0 / 3600.0, tr);
    EXPECT_NEAR(rep.margin, expect, 1e-7) << per_hour;
    EXPECT_EQ(rep.feasible, expect > kFeasibilityTol);
    EXPECT_FALSE(rep.uncovered_movement.has_value());
  }
}

TEST(Feasibility, CriticalScaleMatchesClosedForm) {
  const auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  const TurnRatios tr{};
  const auto d = uniform_demand(g, 300, tr, 10.0, ArrivalDistribution::poisson);
  const double r = 300 * 10.0 / 3600.0;
  const double expect = 1.25 / ((tr.straight + tr.left) * r / 2.0);
  const double lam = critical_scale(g, d, 0.5);
  EXPECT_NEAR(lam, expect, 1e-5 * expect);
  EXPECT_TRUE(check_feasibility(g, d.scaled(lam * 0.999), 0.5).feasible);
  EXPECT_FALSE(check_feasibility(g, d.scaled(lam * 1.001), 0.5).feasible);
  EXPECT_TRUE(std::isinf(critical_scale(g, uniform_demand(g, 0, tr, 10.0, ArrivalDistribution::poisson), 0.5)));
}

TEST(Feasibility, MarginIsMonotoneInScale) {
  const auto g = build_synthetic_grid(3, 3, 1, 300, 11.111);
  const auto d = directional_demand(g, 400, 200, TurnRatios{}, 10.0, ArrivalDistribution::poisson);
  double prev = std::numeric_limits<double>::infinity();
  for (double lam = 0.25; lam <= 3.0; lam += 0.25) {
    const double m = check_feasibility(g, d.scaled(lam), 0.5).margin;
    EXPECT_LE(m, prev + 1e-12);
    prev = m;
  }
}

TEST(Feasibility, BindingMovementsAreTight) {
  const auto g = build_synthetic_grid(2, 2, 1, 300, 11.111);
  const auto d = uniform_demand(g, 500, TurnRatios{}, 10.0, ArrivalDistribution::poisson);
  const auto rep = check_feasibility(g, d, 0.5);
  EXPECT_FALSE(rep.binding_movements.empty());
  for (const auto& inter : rep.intersections) {
    double sum = 0.0;
    for (double s : inter.sigma) {
      EXPECT_GE(s, -1e-12);
      sum += s;
    }
    EXPECT_LE(sum, 1.0 + 1e-9);
    EXPECT_GE(inter.margin, rep.margin - 1e-12);
  }
}

TEST(Feasibility, UncoveredMovementIsStructurallyInfeasible) {
  auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  auto& inter = g.intersections[*g.find_intersection("intersection_1_1")];
  const int gone = inter.phases[0].movements[0];
  std::erase_if(inter.phases, [&](const Phase& p) { return p.movements[0] == gone || p.movements[1] == gone; });
  const auto rep = check_feasibility(g, uniform_demand(g, 100, TurnRatios{}, 10.0, ArrivalDistribution::poisson), 0.5);
  EXPECT_FALSE(rep.feasible);
  ASSERT_TRUE(rep.uncovered_movement.has_value());
  EXPECT_EQ(*rep.uncovered_movement, gone);
}

TEST(Drift, DeterministicSingleQueueIsExact) {
  const auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  const int m = g.movement_at(*g.find_intersection("intersection_1_1"), Side::north, Turn::straight);
  const int in = g.movements[m].in_lane_set;
  DemandSpec d;
  d.arrivals = ArrivalDistribution::deterministic;
  d.entry_rate.assign(g.lane_sets.size(), 0.0);
  d.entry_rate[in] = 3.0;
  d.lane_share = lane_shares_from_ratios(g, TurnRatios{});
  DriftOptions o;
  o.config = deterministic_macro();
  o.replications = 30;
  for (std::int64_t q : {10, 20}) {
    std::vector<std::int64_t> s(g.lane_sets.size(), 0);
    s[in] = q;
    o.states.push_back(s);
  }
  const auto rep = lyapunov_drift(g, d, "g2p", o);
  ASSERT_EQ(rep.samples.size(), 2u);
  EXPECT_EQ(rep.samples[0].drift, 8.0 * 8.0 - 100.0);
  EXPECT_EQ(rep.samples[1].drift, 18.0 * 18.0 - 400.0);
  EXPECT_EQ(rep.samples[0].variance, 0.0);
  EXPECT_EQ(rep.samples[1].variance, 0.0);
  EXPECT_EQ(rep.observations, 60u);
  EXPECT_NEAR(rep.slope, -4.0, 1e-9);
  EXPECT_EQ(rep.verdict, DriftVerdict::negative_drift);
}

TEST(Drift, ZeroDemandZeroQueue) {
  const auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  DriftOptions o;
  o.config = deterministic_macro();
  o.states.assign(2, std::vector<std::int64_t>(g.lane_sets.size(), 0));
  o.states[1][g.incoming_lane_sets()[0]] = 4;
  const auto rep = lyapunov_drift(g, DemandSpec{}, "max_pressure", o);
  EXPECT_EQ(rep.samples[0].drift, 0.0);
  EXPECT_EQ(rep.samples[0].norm, 0.0);
}

TEST(Drift, FeasibleGridHasNegativeDrift) {
  const auto g = build_synthetic_grid(2, 2, 1, 300, 11.111);
  const auto d = uniform_demand(g, 300, TurnRatios{}, 10.0, ArrivalDistribution::poisson);
  ASSERT_TRUE(check_feasibility(g, d, 0.5).feasible);
  DriftOptions o;
  o.config = deterministic_macro();
  o.config.service = ServiceDistribution::binomial;
  o.seed = 5;
  const auto rep = lyapunov_drift(g, d, "g2p", o);
  EXPECT_EQ(rep.samples.size(), 40u);
  EXPECT_GE(rep.observations, 30u);
  EXPECT_EQ(rep.verdict, DriftVerdict::negative_drift);
  EXPECT_LT(rep.slope_high, 0.0);
}

TEST(Drift, WorkerCountDoesNotChangeTheReport) {
  const auto g = build_synthetic_grid(2, 2, 1, 300, 11.111);
  const auto d = uniform_demand(g, 400, TurnRatios{}, 10.0, ArrivalDistribution::poisson);
  DriftOptions o;
  o.config = deterministic_macro();
  o.magnitudes = {20, 200};
  o.directions = 3;
  const auto a = lyapunov_drift(g, d, "g2p", o);
  o.workers = 3;
  const auto b = lyapunov_drift(g, d, "g2p", o);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) EXPECT_EQ(a.samples[k].drift, b.samples[k].drift);
  EXPECT_EQ(a.slope, b.slope);
}

TEST(Drift, RejectsTooFewReplications) {
  const auto g = build_synthetic_grid(1, 1, 1, 300, 11.111);
  DriftOptions o;
  o.replications = 10;
  EXPECT_THROW(lyapunov_drift(g, DemandSpec{}, "g2p", o), ConfigError);
  o.replications = 30;
  EXPECT_THROW(lyapunov_drift(g, DemandSpec{}, "nope", o), ConfigError);
}

TEST(Boundedness, ConstantIsBounded) {
  const std::vector<std::int64_t> s(600, 42);
  const auto r = boundedness_verdict(s);
  EXPECT_EQ(r.verdict, Boundedness::bounded);
  EXPECT_NEAR(r.running_average.back(), 42.0, 1e-12);
}

TEST(Boundedness, RampIsGrowing) {
  std::vector<std::int64_t> s(600);
  for (std::size_t t = 0; t < s.size(); ++t) s[t] = static_cast<std::int64_t>(t);
  const auto r = boundedness_verdict(s);
  EXPECT_EQ(r.verdict, Boundedness::growing);
  EXPECT_GT(r.slope_low, 0.0);
}

TEST(Boundedness, NoisyStationaryIsBounded) {
  std::mt19937_64 rng(7);
  std::poisson_distribution<int> p(30);
  std::vector<std::int64_t> s(2000);
  for (auto& v : s) v = p(rng);
  EXPECT_EQ(boundedness_verdict(s).verdict, Boundedness::bounded);
}

TEST(Boundedness, ShortLogIsRejected) {
  const std::vector<std::int64_t> s(499, 1);
  EXPECT_THROW(boundedness_verdict(s), ConfigError);
}

namespace {

Boundedness verdict_at(int n, double scale) {
  const auto g = build_synthetic_grid(n, n, 1, 300, 11.111);
  const auto base = uniform_demand(g, 300, TurnRatios{}, 10.0, ArrivalDistribution::poisson);
  const double lam = critical_scale(g, base, 0.5);
  SimConfig c = deterministic_macro();
  c.horizon = 10.0 * 2000;
  c.service = ServiceDistribution::binomial;
  auto p = make_policy("g2p", 1);
  return boundedness_verdict(run(g, base.scaled(scale * lam), *p, c).total_queue_series).verdict;
}

}  // namespace

TEST(Boundedness, FeasibleBoundedOverloadGrowing) {
  EXPECT_EQ(verdict_at(2, 0.3), Boundedness::bounded);
  EXPECT_EQ(verdict_at(2, 1.5), Boundedness::growing);
}

TEST(Boundedness, SingleIntersectionFlipsNearCriticalScale) {
  EXPECT_EQ(verdict_at(1, 0.9), Boundedness::bounded);
  EXPECT_EQ(verdict_at(1, 1.05), Boundedness::growing);
}

TEST(Boundedness, TrajectoryTotals) {
  std::vector<TrajectoryRecord> recs(4);
  recs[0] = {0.0, "a", 1, {{0, 3, 3, 0, 0}, {1, 2, 1, 1, 0}}};
  recs[1] = {0.0, "b", 1, {{2, 5, 5, 0, 0}}};
  recs[2] = {10.0, "a", 1, {{0, 1, 1, 0, 0}}};
  recs[3] = {10.0, "b", 2, {{2, 0, 0, 0, 0}}};
  EXPECT_EQ(total_queue_from_trajectory(recs), (std::vector<std::int64_t>{10, 1}));
}

TEST(Ols, ExactLineAndInterval) {
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> y{1, 3, 5, 7, 9};
  const auto f = fit_line(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(f.intercept, 1.0, 1e-12);
  EXPECT_NEAR(f.slope_low, 2.0, 1e-9);
  // Noisy case against a hand computation: y = {0, 2, 1, 3}, x = {0..3}.
  const auto g = fit_line(std::vector<double>{0, 1, 2, 3}, std::vector<double>{0, 2, 1, 3});
  EXPECT_NEAR(g.slope, 0.8, 1e-12);
  // SSE = 1.8, se = sqrt(1.8 / 2 / 5) = 0.4243; t(0.975, 2) = 4.3027.
  EXPECT_NEAR(g.slope_high - g.slope, 4.302653 * std::sqrt(0.18), 1e-5);
  EXPECT_THROW(fit_line(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
}
