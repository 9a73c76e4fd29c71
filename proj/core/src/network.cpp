#include "g2p/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "g2p/error.hpp"

namespace g2p {

std::string_view to_string(Turn t) {
  switch (t) {
    case Turn::left: return "turn_left";
    case Turn::straight: return "go_straight";
    case Turn::right: return "turn_right";
  }
  return "?";
}

std::string_view to_string(Side s) {
  switch (s) {
    case Side::north: return "N";
    case Side::east: return "E";
    case Side::south: return "S";
    case Side::west: return "W";
  }
  return "?";
}

std::optional<Turn> parse_turn(std::string_view s) {
  if (s == "turn_left") return Turn::left;
  if (s == "go_straight") return Turn::straight;
  if (s == "turn_right") return Turn::right;
  return std::nullopt;
}

Side exit_side(Side approach, Turn turn) {
  // Sides are clockwise N=0 E=1 S=2 W=3; heading is opposite the approach.
  const int heading = (static_cast<int>(approach) + 2) % 4;
  switch (turn) {
    case Turn::straight: return static_cast<Side>(heading);
    case Turn::left: return static_cast<Side>((heading + 3) % 4);
    case Turn::right: return static_cast<Side>((heading + 1) % 4);
  }
  return approach;
}

bool non_conflicting(MovementKey a, MovementKey b) {
  for (const auto& p : kStandardPhases) {
    if ((p[0] == a && p[1] == b) || (p[0] == b && p[1] == a)) return true;
  }
  return false;
}

namespace {

Side side_of_vector(double dx, double dy) {
  if (std::abs(dx) >= std::abs(dy)) return dx >= 0 ? Side::east : Side::west;
  return dy >= 0 ? Side::north : Side::south;
}

double polyline_length(const std::vector<std::pair<double, double>>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    len += std::hypot(pts[i].first - pts[i - 1].first, pts[i].second - pts[i - 1].second);
  }
  return len;
}

}  // namespace

Side road_side(const NetworkGraph& graph, int road, int intersection) {
  const Road& r = graph.roads.at(road);
  const auto& pts = r.points;
  if (pts.size() < 2) throw TopologyError(r.name, "road has fewer than two points");
  if (r.end_node == intersection) {
    const auto& a = pts[pts.size() - 2];
    const auto& b = pts.back();
    return side_of_vector(a.first - b.first, a.second - b.second);
  }
  const auto& a = pts[0];
  const auto& b = pts[1];
  return side_of_vector(b.first - a.first, b.second - a.second);
}

int NetworkGraph::movement_at(int intersection, Side side, Turn turn) const {
  for (int m : intersections.at(intersection).movements) {
    const auto& mv = movements[m];
    if (mv.approach == side && mv.turn == turn) return m;
  }
  return -1;
}

int NetworkGraph::movement_from_lane_set(int lane_set) const {
  if (lane_set < 0 || static_cast<std::size_t>(lane_set) >= movement_by_in_lane_set_.size()) return -1;
  return movement_by_in_lane_set_[lane_set];
}

std::optional<int> NetworkGraph::find_intersection(std::string_view name) const {
  for (const auto& i : intersections) {
    if (i.name == name) return i.id;
  }
  return std::nullopt;
}

std::optional<int> NetworkGraph::find_road(std::string_view name) const {
  for (const auto& r : roads) {
    if (r.name == name) return r.id;
  }
  return std::nullopt;
}

std::vector<int> NetworkGraph::signalized_intersections() const {
  std::vector<int> out;
  for (const auto& i : intersections) {
    if (!i.is_virtual) out.push_back(i.id);
  }
  return out;
}

std::vector<int> NetworkGraph::incoming_lane_sets() const {
  std::vector<int> out;
  out.reserve(movements.size());
  for (const auto& m : movements) out.push_back(m.in_lane_set);
  std::sort(out.begin(), out.end());
  return out;
}

void NetworkGraph::rebuild_index() {
  movement_by_in_lane_set_.assign(lane_sets.size(), -1);
  for (const auto& m : movements) {
    if (m.in_lane_set >= 0 && static_cast<std::size_t>(m.in_lane_set) < lane_sets.size()) {
      movement_by_in_lane_set_[m.in_lane_set] = m.id;
    }
  }
}

int NetworkBuilder::add_intersection(std::string name, bool is_virtual, double x, double y) {
  Intersection i;
  i.id = static_cast<int>(graph_.intersections.size());
  i.name = std::move(name);
  i.is_virtual = is_virtual;
  i.x = x;
  i.y = y;
  graph_.intersections.push_back(std::move(i));
  phase_hints_.emplace_back();
  return graph_.intersections.back().id;
}

int NetworkBuilder::add_road(std::string name, int start_node, int end_node, double max_speed,
                             int lane_count, const std::vector<std::pair<double, double>>& points) {
  const int n = static_cast<int>(graph_.intersections.size());
  if (start_node < 0 || start_node >= n) throw TopologyError(name, "road start references unknown intersection");
  if (end_node < 0 || end_node >= n) throw TopologyError(name, "road end references unknown intersection");
  Road r;
  r.id = static_cast<int>(graph_.roads.size());
  r.name = std::move(name);
  r.start_node = start_node;
  r.end_node = end_node;
  r.max_speed = max_speed;
  r.lane_count = lane_count;
  r.points = points;
  if (r.points.size() < 2) {
    const auto& a = graph_.intersections[start_node];
    const auto& b = graph_.intersections[end_node];
    r.points = {{a.x, a.y}, {b.x, b.y}};
  }
  r.length = polyline_length(r.points);
  graph_.roads.push_back(std::move(r));
  graph_.intersections[start_node].outgoing_roads.push_back(graph_.roads.back().id);
  graph_.intersections[end_node].incoming_roads.push_back(graph_.roads.back().id);
  return graph_.roads.back().id;
}

void NetworkBuilder::add_movement(int in_road, int out_road, Turn turn, int lane_count) {
  const int n = static_cast<int>(graph_.roads.size());
  if (in_road < 0 || in_road >= n) throw TopologyError(std::to_string(in_road), "movement references unknown road");
  if (out_road < 0 || out_road >= n) throw TopologyError(std::to_string(out_road), "movement references unknown road");
  pending_.push_back({in_road, out_road, turn, lane_count});
}

void NetworkBuilder::set_phase_hints(int intersection, std::vector<std::array<RoadPair, 2>> phases) {
  phase_hints_.at(intersection) = std::move(phases);
}

NetworkGraph NetworkBuilder::build() && {
  NetworkGraph& g = graph_;

  // One lane set per (incoming road, turn type); duplicates merge.
  std::map<std::pair<int, Turn>, int> lane_set_of;
  auto make_lane_set = [&](int road, Turn turn, int lanes) {
    auto key = std::make_pair(road, turn);
    if (auto it = lane_set_of.find(key); it != lane_set_of.end()) {
      auto& ls = g.lane_sets[it->second];
      ls.lane_count = std::max(ls.lane_count, lanes);
      return it->second;
    }
    const Road& r = g.roads[road];
    LaneSet ls;
    ls.id = static_cast<int>(g.lane_sets.size());
    ls.road = road;
    ls.direction = turn;
    ls.lane_count = lanes;
    ls.max_speed = r.max_speed;
    ls.length = r.length;
    g.lane_sets.push_back(ls);
    g.roads[road].lane_sets.push_back(ls.id);
    lane_set_of.emplace(key, ls.id);
    return ls.id;
  };

  // Deterministic order: by intersection, then approach side, then turn.
  std::vector<std::size_t> order(pending_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto sort_key = [&](std::size_t i) {
    const auto& p = pending_[i];
    const int node = g.roads[p.in_road].end_node;
    return std::make_tuple(node, static_cast<int>(road_side(g, p.in_road, node)), static_cast<int>(p.turn),
                           p.out_road);
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sort_key(a) < sort_key(b); });

  std::map<std::pair<int, int>, int> movement_of_roads;
  for (std::size_t idx : order) {
    const auto& p = pending_[idx];
    if (movement_of_roads.count({p.in_road, p.out_road})) continue;
    const Road& in = g.roads[p.in_road];
    const Road& out = g.roads[p.out_road];
    if (in.end_node != out.start_node) {
      throw TopologyError(in.name + "->" + out.name, "movement roads do not meet at one intersection");
    }
    TurnMovement m;
    m.id = static_cast<int>(g.movements.size());
    m.intersection = in.end_node;
    m.in_road = p.in_road;
    m.out_road = p.out_road;
    m.turn = p.turn;
    m.approach = road_side(g, p.in_road, in.end_node);
    m.in_lane_set = make_lane_set(p.in_road, p.turn, p.lane_count);
    g.movements.push_back(m);
    g.intersections[m.intersection].movements.push_back(m.id);
    movement_of_roads.emplace(std::make_pair(p.in_road, p.out_road), m.id);
  }

  // Roads that feed no movement (exit roads) get one lane set spanning all lanes.
  for (auto& r : g.roads) {
    if (r.lane_sets.empty()) make_lane_set(r.id, Turn::straight, r.lane_count);
  }
  for (auto& m : g.movements) m.out_lane_sets = g.roads[m.out_road].lane_sets;

  for (auto& inter : g.intersections) {
    if (inter.is_virtual) continue;
    auto key_of = [&](int m) { return MovementKey{g.movements[m].approach, g.movements[m].turn}; };

    std::vector<Phase> hinted;
    bool hints_ok = !phase_hints_[inter.id].empty();
    for (const auto& pair : phase_hints_[inter.id]) {
      auto a = movement_of_roads.find(pair[0]);
      auto b = movement_of_roads.find(pair[1]);
      if (a == movement_of_roads.end() || b == movement_of_roads.end()) {
        hints_ok = false;
        break;
      }
      int slot = -1;
      for (int s = 0; s < kMaxPhases; ++s) {
        const auto& t = kStandardPhases[s];
        if (key_of(a->second) == t[0] && key_of(b->second) == t[1]) slot = s;
        if (key_of(a->second) == t[1] && key_of(b->second) == t[0]) slot = s;
      }
      if (slot < 0) {
        hints_ok = false;
        break;
      }
      const auto& t = kStandardPhases[slot];
      const int first = key_of(a->second) == t[0] ? a->second : b->second;
      const int second = first == a->second ? b->second : a->second;
      hinted.push_back(Phase{slot + 1, {first, second}});
    }
    if (hints_ok) {
      std::sort(hinted.begin(), hinted.end(), [](const Phase& x, const Phase& y) { return x.index < y.index; });
      hinted.erase(std::unique(hinted.begin(), hinted.end()), hinted.end());
      for (int m : inter.movements) {
        if (g.movements[m].turn == Turn::right) continue;
        const bool covered = std::any_of(hinted.begin(), hinted.end(), [m](const Phase& ph) {
          return ph.movements[0] == m || ph.movements[1] == m;
        });
        if (!covered) hints_ok = false;
      }
    }

    if (hints_ok) {
      inter.phases = std::move(hinted);
    } else {
      inter.phases.clear();
      for (int s = 0; s < kMaxPhases; ++s) {
        const auto& t = kStandardPhases[s];
        const int a = g.movement_at(inter.id, t[0].first, t[0].second);
        const int b = g.movement_at(inter.id, t[1].first, t[1].second);
        if (a >= 0 && b >= 0) inter.phases.push_back(Phase{s + 1, {a, b}});
      }
    }
    inter.reduced_phase_set = inter.phases.size() < static_cast<std::size_t>(kMaxPhases);
  }

  for (auto& r : g.roads) {
    const bool from_virtual = g.intersections[r.start_node].is_virtual;
    const bool to_virtual = g.intersections[r.end_node].is_virtual;
    if (from_virtual && !to_virtual) {
      r.road_class = RoadClass::entry;
      g.entry_roads.push_back(r.id);
    } else if (!from_virtual && to_virtual) {
      r.road_class = RoadClass::exit;
      g.exit_roads.push_back(r.id);
    } else if (!from_virtual && !to_virtual) {
      r.road_class = RoadClass::internal;
      g.internal_roads.push_back(r.id);
    } else {
      r.road_class = RoadClass::unclassified;
    }
  }

  g.rebuild_index();
  return std::move(graph_);
}

NetworkGraph build_synthetic_grid(int rows, int cols, int lanes_per_direction, double road_length,
                                  double max_speed) {
  if (rows < 1 || cols < 1) throw ConfigError("grid needs rows >= 1 and cols >= 1");
  if (lanes_per_direction < 1) throw ConfigError("grid needs lanes_per_direction >= 1");
  if (!(road_length > 0.0) || !(max_speed > 0.0)) throw ConfigError("grid needs positive road length and speed");

  NetworkBuilder b;
  auto name = [](int r, int c) { return "intersection_" + std::to_string(r) + "_" + std::to_string(c); };
  // Row 1 is the northernmost row.
  auto pos = [&](int r, int c) { return std::make_pair(c * road_length, (rows + 1 - r) * road_length); };

  std::map<std::pair<int, int>, int> node;
  for (int r = 1; r <= rows; ++r) {
    for (int c = 1; c <= cols; ++c) {
      auto [x, y] = pos(r, c);
      node[{r, c}] = b.add_intersection(name(r, c), false, x, y);
    }
  }
  auto add_virtual = [&](int r, int c) {
    auto [x, y] = pos(r, c);
    node[{r, c}] = b.add_intersection(name(r, c), true, x, y);
  };
  for (int c = 1; c <= cols; ++c) add_virtual(0, c);
  for (int r = 1; r <= rows; ++r) add_virtual(r, cols + 1);
  for (int c = 1; c <= cols; ++c) add_virtual(rows + 1, c);
  for (int r = 1; r <= rows; ++r) add_virtual(r, 0);

  // Neighbour offsets in Side order N, E, S, W.
  constexpr std::array<std::pair<int, int>, 4> kStep{{{-1, 0}, {0, 1}, {1, 0}, {0, -1}}};
  std::map<std::pair<int, int>, int> road_between;  // (from node, to node)
  auto add_road = [&](int r0, int c0, int r1, int c1) {
    const int a = node.at({r0, c0});
    const int bb = node.at({r1, c1});
    const std::string rn = "road_" + std::to_string(r0) + "_" + std::to_string(c0) + "_" + std::to_string(r1) + "_" +
                           std::to_string(c1);
    const int id = b.add_road(rn, a, bb, max_speed, 3 * lanes_per_direction, {pos(r0, c0), pos(r1, c1)});
    road_between[{a, bb}] = id;
  };
  for (int r = 1; r <= rows; ++r) {
    for (int c = 1; c <= cols; ++c) {
      for (const auto& [dr, dc] : kStep) add_road(r, c, r + dr, c + dc);
    }
  }
  for (const auto& [rc, id] : node) {
    const auto [r, c] = rc;
    if (r >= 1 && r <= rows && c >= 1 && c <= cols) continue;
    for (const auto& [dr, dc] : kStep) {
      const int nr = r + dr;
      const int nc = c + dc;
      if (nr >= 1 && nr <= rows && nc >= 1 && nc <= cols) add_road(r, c, nr, nc);
    }
  }

  for (int r = 1; r <= rows; ++r) {
    for (int c = 1; c <= cols; ++c) {
      const int here = node.at({r, c});
      for (int s = 0; s < 4; ++s) {
        const Side approach = static_cast<Side>(s);
        const int from = node.at({r + kStep[s].first, c + kStep[s].second});
        const int in_road = road_between.at({from, here});
        for (Turn t : {Turn::left, Turn::straight, Turn::right}) {
          const int e = static_cast<int>(exit_side(approach, t));
          const int to = node.at({r + kStep[e].first, c + kStep[e].second});
          b.add_movement(in_road, road_between.at({here, to}), t, lanes_per_direction);
        }
      }
    }
  }
  return std::move(b).build();
}

std::vector<std::string> validate(const NetworkGraph& g) {
  std::vector<std::string> out;
  auto say = [&out](auto&&... parts) {
    std::ostringstream os;
    (os << ... << parts);
    out.push_back(os.str());
  };
  const int n_roads = static_cast<int>(g.roads.size());
  const int n_ls = static_cast<int>(g.lane_sets.size());
  const int n_mv = static_cast<int>(g.movements.size());

  for (const auto& ls : g.lane_sets) {
    if (ls.lane_count < 1) say("lane set ", ls.id, " has lane_count < 1");
    if (!(ls.max_speed > 0.0)) say("lane set ", ls.id, " has non-positive max_speed");
    if (!(ls.length > 0.0)) say("lane set ", ls.id, " has non-positive length");
    if (ls.road < 0 || ls.road >= n_roads) {
      say("lane set ", ls.id, " references unknown road ", ls.road);
      continue;
    }
    const auto& owner = g.roads[ls.road].lane_sets;
    if (std::find(owner.begin(), owner.end(), ls.id) == owner.end()) {
      say("lane set ", ls.id, " is not listed by its road ", g.roads[ls.road].name);
    }
  }

  for (const auto& m : g.movements) {
    if (m.in_road < 0 || m.in_road >= n_roads || m.out_road < 0 || m.out_road >= n_roads) {
      say("movement ", m.id, " references an unknown road");
      continue;
    }
    const Road& in = g.roads[m.in_road];
    const Road& outr = g.roads[m.out_road];
    if (m.in_lane_set < 0 || m.in_lane_set >= n_ls || g.lane_sets[m.in_lane_set].road != m.in_road) {
      say("movement ", m.id, " in_lane_set does not belong to in_road ", in.name);
    }
    std::set<int> want(outr.lane_sets.begin(), outr.lane_sets.end());
    std::set<int> have(m.out_lane_sets.begin(), m.out_lane_sets.end());
    if (want != have) say("movement ", m.id, " out_lane_sets differ from the lane sets of ", outr.name);
    if (in.end_node != m.intersection || outr.start_node != m.intersection) {
      say("movement ", m.id, " roads do not meet at intersection ", m.intersection);
    }
    if (outr.end_node == in.start_node) say("movement ", m.id, " is a U-turn");
  }

  for (const auto& inter : g.intersections) {
    if (inter.is_virtual) {
      if (!inter.phases.empty() || !inter.movements.empty()) {
        say("virtual intersection ", inter.name, " carries movements or phases");
      }
      continue;
    }
    if (inter.phases.empty()) say("intersection ", inter.name, " has no phases");
    std::set<int> seen_index;
    std::set<int> covered;
    for (const auto& ph : inter.phases) {
      if (ph.index < 1 || ph.index > kMaxPhases) say("intersection ", inter.name, " phase index ", ph.index, " out of range");
      if (!seen_index.insert(ph.index).second) say("intersection ", inter.name, " repeats phase index ", ph.index);
      bool ok = true;
      for (int mv : ph.movements) {
        if (mv < 0 || mv >= n_mv || g.movements[mv].intersection != inter.id) {
          say("intersection ", inter.name, " phase ", ph.index, " references foreign movement ", mv);
          ok = false;
        }
      }
      if (!ok) continue;
      const auto& a = g.movements[ph.movements[0]];
      const auto& b = g.movements[ph.movements[1]];
      if (a.turn == Turn::right || b.turn == Turn::right) {
        say("intersection ", inter.name, " phase ", ph.index, " contains a right turn");
      } else if (!non_conflicting({a.approach, a.turn}, {b.approach, b.turn})) {
        say("intersection ", inter.name, " phase ", ph.index, " pairs conflicting movements ", a.id, " and ", b.id);
      }
      covered.insert(a.id);
      covered.insert(b.id);
    }
    for (int mv : inter.movements) {
      if (mv < 0 || mv >= n_mv) continue;
      // A reduced set may strand a movement whose partner lane set is missing.
      if (!inter.reduced_phase_set && g.movements[mv].turn != Turn::right && !covered.count(mv)) {
        say("intersection ", inter.name, " movement ", mv, " is served by no phase");
      }
    }
  }

  std::map<int, int> membership;
  for (int r : g.entry_roads) ++membership[r];
  for (int r : g.exit_roads) ++membership[r];
  for (int r : g.internal_roads) ++membership[r];
  for (const auto& r : g.roads) {
    const int count = membership.count(r.id) ? membership[r.id] : 0;
    if (count == 0) say("road ", r.name, " is in no partition class");
    if (count > 1) say("road ", r.name, " is in more than one partition class");
  }
  for (int r : g.internal_roads) {
    if (r < 0 || r >= n_roads) continue;
    const Road& rd = g.roads[r];
    if (g.intersections[rd.start_node].is_virtual || g.intersections[rd.end_node].is_virtual) {
      say("internal road ", rd.name, " does not join two signalized intersections");
    }
  }
  return out;
}

}  // namespace g2p
