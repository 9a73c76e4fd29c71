#include "g2p/policy.hpp"

#include <cmath>

#include "g2p/error.hpp"

namespace g2p {

void SignalTiming::check() const {
  if (action_duration < 0 || yellow < 0 || all_red < 0) throw ConfigError("signal timing values must be >= 0");
  if (!(action_duration > 0)) throw ConfigError("action_duration must be positive");
  if (action_duration < yellow + all_red) throw ConfigError("action_duration must cover yellow + all_red");
}

Transition schedule_transition(int current_phase, int next_phase, const SignalTiming& timing) {
  if (current_phase == next_phase) return {};
  return Transition{true, timing.yellow, timing.all_red};
}

template <typename Score>
int argmax_phase(std::span<const Phase> phases, std::span<const Score> scores) {
  if (phases.empty()) throw ConfigError("cannot select from an empty phase list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < phases.size(); ++i) {
    if (scores[i] > scores[best] || (scores[i] == scores[best] && phases[i].index < phases[best].index)) best = i;
  }
  return phases[best].index;
}

template int argmax_phase<std::int64_t>(std::span<const Phase>, std::span<const std::int64_t>);
template int argmax_phase<double>(std::span<const Phase>, std::span<const double>);

namespace {

template <typename Fn>
int choose_by(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection, Fn score) {
  const auto& phases = graph.intersections.at(intersection).phases;
  using Score = decltype(score(graph, snap, phases.front()));
  std::vector<Score> s;
  s.reserve(phases.size());
  for (const auto& p : phases) s.push_back(score(graph, snap, p));
  return argmax_phase<Score>(phases, s);
}

int current_of(const TrafficSnapshot& snap, int intersection) {
  return static_cast<std::size_t>(intersection) < snap.current_phase.size() ? snap.current_phase[intersection] : 0;
}

PolicyDecision decision(const TrafficSnapshot& snap, int intersection, int next, const SignalTiming& timing) {
  return PolicyDecision{intersection, next, schedule_transition(current_of(snap, intersection), next, timing)};
}

void require_phases(const NetworkGraph& graph, int intersection) {
  if (graph.intersections.at(intersection).phases.empty()) {
    throw ConfigError("intersection " + graph.intersections[intersection].name + " has no phases");
  }
}

}  // namespace

int g2p_choose(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection) {
  require_phases(graph, intersection);
  return choose_by(graph, snap, intersection, phase_pressure);
}

int max_pressure_choose(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection) {
  require_phases(graph, intersection);
  return choose_by(graph, snap, intersection, max_pressure_phase);
}

int efficient_mp_choose(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection) {
  require_phases(graph, intersection);
  return choose_by(graph, snap, intersection, efficient_phase_pressure);
}

int fixed_time_choose(double clock, std::span<const Phase> phases, const SignalTiming& timing) {
  if (phases.empty()) throw ConfigError("cannot select from an empty phase list");
  // Phases are stored in index order; slot k is the k-th action period.
  const auto slot = static_cast<long long>(std::floor(clock / timing.action_duration + 1e-9));
  const auto n = static_cast<long long>(phases.size());
  return phases[static_cast<std::size_t>(((slot % n) + n) % n)].index;
}

int random_choose(std::mt19937_64& rng, std::span<const Phase> phases) {
  if (phases.empty()) throw ConfigError("cannot select from an empty phase list");
  std::uniform_int_distribution<std::size_t> pick(0, phases.size() - 1);
  return phases[pick(rng)].index;
}

PolicyDecision g2p_select(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection,
                          const SignalTiming& timing) {
  return decision(snap, intersection, g2p_choose(graph, snap, intersection), timing);
}

PolicyDecision max_pressure_select(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection,
                                   const SignalTiming& timing) {
  return decision(snap, intersection, max_pressure_choose(graph, snap, intersection), timing);
}

PolicyDecision efficient_mp_select(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection,
                                   const SignalTiming& timing) {
  return decision(snap, intersection, efficient_mp_choose(graph, snap, intersection), timing);
}

PolicyDecision fixed_time_select(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection,
                                 const SignalTiming& timing) {
  const auto& phases = graph.intersections.at(intersection).phases;
  return decision(snap, intersection, fixed_time_choose(snap.time, phases, timing), timing);
}

PolicyDecision random_select(std::mt19937_64& rng, const NetworkGraph& graph, const TrafficSnapshot& snap,
                             int intersection, const SignalTiming& timing) {
  const auto& phases = graph.intersections.at(intersection).phases;
  return decision(snap, intersection, random_choose(rng, phases), timing);
}

namespace {

using SelectFn = PolicyDecision (*)(const NetworkGraph&, const TrafficSnapshot&, int, const SignalTiming&);

class StatelessPolicy final : public Policy {
 public:
  StatelessPolicy(std::string_view name, SelectFn fn) : name_(name), fn_(fn) {}
  std::string_view name() const override { return name_; }
  std::vector<PolicyDecision> decide(const NetworkGraph& graph, const TrafficSnapshot& snap,
                                     const SignalTiming& timing) override {
    std::vector<PolicyDecision> out;
    for (const auto& inter : graph.intersections) {
      if (!inter.is_virtual) out.push_back(fn_(graph, snap, inter.id, timing));
    }
    return out;
  }

 private:
  std::string_view name_;
  SelectFn fn_;
};

class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  std::string_view name() const override { return "random"; }
  std::vector<PolicyDecision> decide(const NetworkGraph& graph, const TrafficSnapshot& snap,
                                     const SignalTiming& timing) override {
    std::vector<PolicyDecision> out;
    for (const auto& inter : graph.intersections) {
      if (!inter.is_virtual) out.push_back(random_select(rng_, graph, snap, inter.id, timing));
    }
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(std::string_view name, std::uint64_t seed) {
  if (name == "g2p") return std::make_unique<StatelessPolicy>("g2p", g2p_select);
  if (name == "max_pressure") return std::make_unique<StatelessPolicy>("max_pressure", max_pressure_select);
  if (name == "efficient_mp") return std::make_unique<StatelessPolicy>("efficient_mp", efficient_mp_select);
  if (name == "fixed_time") return std::make_unique<StatelessPolicy>("fixed_time", fixed_time_select);
  if (name == "random") return std::make_unique<RandomPolicy>(seed ^ 0x9e3779b97f4a7c15ULL);
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

std::vector<std::string> policy_names() { return {"g2p", "max_pressure", "efficient_mp", "fixed_time", "random"}; }

}  // namespace g2p
