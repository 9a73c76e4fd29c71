#include <benchmark/benchmark.h>

#include <random>

#include "g2p/policy.hpp"
#include "g2p/pressure.hpp"
#include "g2p/simulation.hpp"
#include "g2p/stability.hpp"

using namespace g2p;

namespace {

const NetworkGraph& manhattan() {
  static const NetworkGraph g = build_synthetic_grid(14, 14, 1, 300, 11.111);
  return g;
}

TrafficSnapshot random_snapshot(const NetworkGraph& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> q(0, 40);
  auto s = TrafficSnapshot::zeros(g);
  for (auto& st : s.lane_sets) {
    st.queue = q(rng);
    st.truncated_queue = std::uniform_int_distribution<std::int64_t>(0, st.queue)(rng);
    st.residual_queue = st.queue - st.truncated_queue;
  }
  return s;
}

void BM_PhasePressureAllIntersections(benchmark::State& state) {
  const auto& g = manhattan();
  const auto snap = random_snapshot(g, 1);
  for (auto _ : state) {
    std::int64_t acc = 0;
    for (const auto& inter : g.intersections)
      for (const auto& p : inter.phases) acc += phase_pressure(g, snap, p);
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_PhasePressureAllIntersections);

void BM_G2PDecide(benchmark::State& state) {
  const auto& g = manhattan();
  const auto snap = random_snapshot(g, 2);
  auto policy = make_policy("g2p", 1);
  for (auto _ : state) benchmark::DoNotOptimize(policy->decide(g, snap, SignalTiming{}));
}
BENCHMARK(BM_G2PDecide);

void period_loop(benchmark::State& state, SimMode mode) {
  const auto& g = manhattan();
  const auto d = uniform_demand(g, 300, TurnRatios{}, 10.0, ArrivalDistribution::poisson);
  SimConfig c;
  c.mode = mode;
  c.horizon = 1e9;
  Simulation sim(g, d, c);
  auto policy = make_policy("g2p", 1);
  for (auto _ : state) {
    const auto snap = sim.snapshot();
    sim.apply(policy->decide(g, snap, c.timing));
    sim.advance();
  }
}

void BM_MesoscopicPeriod(benchmark::State& state) { period_loop(state, SimMode::mesoscopic); }
BENCHMARK(BM_MesoscopicPeriod);

void BM_MacroscopicPeriod(benchmark::State& state) { period_loop(state, SimMode::macroscopic); }
BENCHMARK(BM_MacroscopicPeriod);

void BM_FeasibilityCheck(benchmark::State& state) {
  const auto& g = manhattan();
  const auto d = uniform_demand(g, 300, TurnRatios{}, 10.0, ArrivalDistribution::poisson);
  for (auto _ : state) benchmark::DoNotOptimize(check_feasibility(g, d, 0.5).margin);
}
BENCHMARK(BM_FeasibilityCheck)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
