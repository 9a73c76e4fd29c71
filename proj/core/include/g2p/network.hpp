#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace g2p {

enum class Turn : std::uint8_t { left, straight, right };

/// Compass side of an intersection a road attaches to. For an incoming road
/// this is the approach (where traffic comes from); for an outgoing road it is
/// the side traffic leaves towards.
enum class Side : std::uint8_t { north, east, south, west };

enum class RoadClass : std::uint8_t { entry, exit, internal, unclassified };

std::string_view to_string(Turn t);
std::string_view to_string(Side s);
std::optional<Turn> parse_turn(std::string_view s);

/// Side reached when traffic arriving from `approach` makes `turn`.
Side exit_side(Side approach, Turn turn);

/// Homogeneous lanes: all lanes of one road sharing a turning direction.
struct LaneSet {
  int id = -1;
  int road = -1;
  Turn direction = Turn::straight;
  int lane_count = 1;
  double max_speed = 0.0;  // m/s
  double length = 0.0;     // m

  bool operator==(const LaneSet&) const = default;
};

struct Road {
  int id = -1;
  std::string name;
  int start_node = -1;
  int end_node = -1;
  double length = 0.0;
  double max_speed = 0.0;
  int lane_count = 1;
  /// Polyline vertices, x east / y north.
  std::vector<std::pair<double, double>> points;
  std::vector<int> lane_sets;
  RoadClass road_class = RoadClass::unclassified;

  bool operator==(const Road&) const = default;
};

struct TurnMovement {
  int id = -1;
  int intersection = -1;
  int in_road = -1;
  int out_road = -1;
  int in_lane_set = -1;
  std::vector<int> out_lane_sets;
  Turn turn = Turn::straight;
  Side approach = Side::north;

  bool operator==(const TurnMovement&) const = default;
};

struct Phase {
  int index = 0;  // 1..8, slot in the standard table
  std::array<int, 2> movements{-1, -1};

  bool operator==(const Phase&) const = default;
};

struct Intersection {
  int id = -1;
  std::string name;
  bool is_virtual = false;
  double x = 0.0;
  double y = 0.0;
  std::vector<int> incoming_roads;
  std::vector<int> outgoing_roads;
  std::vector<int> movements;
  std::vector<Phase> phases;
  /// Set when fewer than the 8 standard phases could be formed.
  bool reduced_phase_set = false;

  bool operator==(const Intersection&) const = default;
};

/// The eight standard non-conflicting pairs, slot i is phase index i + 1.
///   1 W-straight + E-straight    5 W-straight + W-left
///   2 N-straight + S-straight    6 E-straight + E-left
///   3 W-left     + E-left        7 S-straight + S-left
///   4 N-left     + S-left        8 N-straight + N-left
using MovementKey = std::pair<Side, Turn>;
inline constexpr std::array<std::array<MovementKey, 2>, 8> kStandardPhases{{
    {{{Side::west, Turn::straight}, {Side::east, Turn::straight}}},
    {{{Side::north, Turn::straight}, {Side::south, Turn::straight}}},
    {{{Side::west, Turn::left}, {Side::east, Turn::left}}},
    {{{Side::north, Turn::left}, {Side::south, Turn::left}}},
    {{{Side::west, Turn::straight}, {Side::west, Turn::left}}},
    {{{Side::east, Turn::straight}, {Side::east, Turn::left}}},
    {{{Side::south, Turn::straight}, {Side::south, Turn::left}}},
    {{{Side::north, Turn::straight}, {Side::north, Turn::left}}},
}};

inline constexpr int kMaxPhases = 8;

/// Fixed 12-slot movement order used by feature vectors: straight arrows
/// (down, left, up, right), then left-turn arrows, then right-turn arrows.
///   slot  0..3  straight from N, E, S, W
///   slot  4..7  left     from N, E, S, W
///   slot  8..11 right    from N, W, S, E
inline constexpr std::array<MovementKey, 12> kMovementSlots{{
    {Side::north, Turn::straight}, {Side::east, Turn::straight},
    {Side::south, Turn::straight}, {Side::west, Turn::straight},
    {Side::north, Turn::left},     {Side::east, Turn::left},
    {Side::south, Turn::left},     {Side::west, Turn::left},
    {Side::north, Turn::right},    {Side::west, Turn::right},
    {Side::south, Turn::right},    {Side::east, Turn::right},
}};

/// True when the two (approach, turn) keys form one of the standard phases.
bool non_conflicting(MovementKey a, MovementKey b);

/// Static road network. Ids are dense indices into the vectors.
struct NetworkGraph {
  std::vector<Road> roads;
  std::vector<LaneSet> lane_sets;
  std::vector<Intersection> intersections;
  std::vector<TurnMovement> movements;
  std::vector<int> entry_roads;
  std::vector<int> exit_roads;
  std::vector<int> internal_roads;

  bool operator==(const NetworkGraph&) const = default;

  /// Movement of `intersection` approaching from `side` with `turn`, or -1.
  int movement_at(int intersection, Side side, Turn turn) const;
  /// Movement whose incoming lane set is `lane_set`, or -1.
  int movement_from_lane_set(int lane_set) const;
  std::optional<int> find_intersection(std::string_view name) const;
  std::optional<int> find_road(std::string_view name) const;
  std::vector<int> signalized_intersections() const;
  /// Lane sets that feed a movement (the queues every controller looks at).
  std::vector<int> incoming_lane_sets() const;

  /// Recomputes lookup tables after the vectors were edited directly.
  void rebuild_index();

 private:
  std::vector<int> movement_by_in_lane_set_;
};

/// Side of `intersection` the road attaches to (see Side).
Side road_side(const NetworkGraph& graph, int road, int intersection);

/// Assembles a NetworkGraph from intersections, roads and movements, then
/// derives lane sets, approach sides, phases and the road partition.
class NetworkBuilder {
 public:
  int add_intersection(std::string name, bool is_virtual, double x, double y);
  /// `points` are the polyline vertices; length and heading come from them.
  int add_road(std::string name, int start_node, int end_node, double max_speed, int lane_count,
               const std::vector<std::pair<double, double>>& points);
  /// Declares a turn movement fed by `lane_count` homogeneous lanes.
  void add_movement(int in_road, int out_road, Turn turn, int lane_count);
  /// Movement pairs (as (in_road, out_road)) supplied by the input file. Used
  /// only when every pair is a standard phase and together they cover every
  /// left/straight movement; otherwise the standard table is synthesized.
  using RoadPair = std::pair<int, int>;
  void set_phase_hints(int intersection, std::vector<std::array<RoadPair, 2>> phases);

  NetworkGraph build() &&;

 private:
  struct PendingMovement {
    int in_road;
    int out_road;
    Turn turn;
    int lane_count;
  };
  NetworkGraph graph_;
  std::vector<PendingMovement> pending_;
  std::vector<std::vector<std::array<RoadPair, 2>>> phase_hints_;
};

/// Rows x cols grid of signalized 4-way intersections ringed by virtual
/// boundary nodes. Intersection names are "intersection_<row>_<col>" (1-based,
/// boundary nodes use row/col 0 and rows+1/cols+1).
NetworkGraph build_synthetic_grid(int rows, int cols, int lanes_per_direction, double road_length,
                                  double max_speed);

/// Human-readable invariant violations; empty iff the graph is well formed.
std::vector<std::string> validate(const NetworkGraph& graph);

}  // namespace g2p
