#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "g2p/network.hpp"
#include "g2p/pressure.hpp"
#include "g2p/simulation.hpp"

namespace g2p {

/// Observation of one intersection. Slot k of the per-movement arrays is the
/// movement kMovementSlots[k].
struct FeatureVector {
  int intersection = -1;
  /// e_i for the phase in force; all zeros before the first actuation.
  std::array<double, 8> phase_onehot{};
  std::array<double, 12> tm_pressure{};
  /// 1 where the intersection has no movement for the slot.
  std::array<double, 12> mask{};
  /// (efficient pressure, running count) per slot.
  std::array<double, 24> advanced{};

  static constexpr std::size_t kSize = 8 + 12 + 12 + 24;
  std::array<double, kSize> flatten() const;
  bool operator==(const FeatureVector&) const = default;
};

struct RewardSample {
  int intersection = -1;
  double mplight = 0.0;  // -|Σ Q_in - Σ Q_out|
  double colight = 0.0;  // -Σ Q_in
};

/// Throws TopologyError for an unknown or virtual intersection.
FeatureVector generalized_state(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection);
RewardSample rewards(const NetworkGraph& graph, const TrafficSnapshot& snap, int intersection);

/// Phase choice an external learner would make by summing the observed
/// pressures of each phase's two slots (ties to the lower phase index).
int argmax_observed_phase(const FeatureVector& f, std::span<const int> available_phases);

inline constexpr int kProtocolVersion = 1;

/// One stepping session over one simulation. Requests and responses are
/// single-line JSON objects:
///   {"cmd":"reset"}
///   {"cmd":"step","actions":{"<intersection name>":<phase index>, ...}}
/// Responses carry "v", "t", "done", "obs" and "reward" keyed by intersection
/// name, plus "metrics" once done. Failures answer {"v":1,"error":...,"request":...}
/// and leave the session unchanged.
class EnvSession {
 public:
  EnvSession(const NetworkGraph& graph, DemandSpec demand, SimConfig config);

  nlohmann::json reset();
  /// Throws ConfigError on unknown intersections or phases; nothing is applied then.
  nlohmann::json step(const std::map<std::string, int>& actions);
  /// Parses and dispatches one protocol line; never throws.
  nlohmann::json handle(const std::string& line);

  bool done() const { return sim_->done(); }
  const Simulation& simulation() const { return *sim_; }

 private:
  nlohmann::json observation() const;

  const NetworkGraph* graph_;
  DemandSpec demand_;
  SimConfig config_;
  std::unique_ptr<Simulation> sim_;
};

nlohmann::json to_json(const FeatureVector& f);
nlohmann::json to_json(const RewardSample& r);
nlohmann::json to_json(const RunMetrics& m);

/// Reads requests from `in` until EOF (or the session is done and a request
/// arrives), writing one response line per request.
void serve(EnvSession& session, std::istream& in, std::ostream& out);

}  // namespace g2p
