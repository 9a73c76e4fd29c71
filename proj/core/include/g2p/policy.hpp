#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "g2p/network.hpp"
#include "g2p/pressure.hpp"

namespace g2p {

/// Signal timing shared by every intersection, in seconds.
struct SignalTiming {
  double action_duration = 10.0;
  double yellow = 3.0;
  double all_red = 2.0;

  double lost_time() const { return yellow + all_red; }
  /// Throws ConfigError unless all >= 0 and action_duration >= yellow + all_red.
  void check() const;

  bool operator==(const SignalTiming&) const = default;
};

struct Transition {
  bool active = false;
  double yellow = 0.0;
  double all_red = 0.0;

  bool operator==(const Transition&) const = default;
};

struct PolicyDecision {
  int intersection = -1;
  int next_phase = 0;
  Transition transition;

  bool operator==(const PolicyDecision&) const = default;
};

/// Yellow then all-red when the phase changes, nothing otherwise.
Transition schedule_transition(int current_phase, int next_phase, const SignalTiming& timing);

/// Argmax over `scores` (aligned with `phases`), ties to the lowest phase
/// index. Throws ConfigError on an empty phase list.
template <typename Score>
int argmax_phase(std::span<const Phase> phases, std::span<const Score> scores);

int g2p_choose(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection);
int max_pressure_choose(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection);
int efficient_mp_choose(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection);
/// Cycles the phases in index order, each held for one action duration.
int fixed_time_choose(double clock, std::span<const Phase> phases, const SignalTiming& timing);
int random_choose(std::mt19937_64& rng, std::span<const Phase> phases);

PolicyDecision g2p_select(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection,
                          const SignalTiming& timing);
PolicyDecision max_pressure_select(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection,
                                   const SignalTiming& timing);
PolicyDecision efficient_mp_select(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection,
                                   const SignalTiming& timing);
PolicyDecision fixed_time_select(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection,
                                 const SignalTiming& timing);
PolicyDecision random_select(std::mt19937_64& rng, const NetworkGraph& graph, const TrafficSnapshot& snap,
                             int intersection, const SignalTiming& timing);

/// Common decision interface. Implementations hold no state other than the
/// random policy's generator.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string_view name() const = 0;
  /// One decision per signalized intersection, in intersection id order.
  virtual std::vector<PolicyDecision> decide(const NetworkGraph& graph, const TrafficSnapshot& snap,
                                             const SignalTiming& timing) = 0;
};

/// `g2p | max_pressure | efficient_mp | fixed_time | random`; throws
/// ConfigError for anything else. `seed` only matters for `random`.
std::unique_ptr<Policy> make_policy(std::string_view name, std::uint64_t seed);
std::vector<std::string> policy_names();

}  // namespace g2p
