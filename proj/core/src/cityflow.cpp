#include "g2p/cityflow.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "g2p/error.hpp"

namespace g2p {

using nlohmann::json;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

json parse_or_throw(std::string_view text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(origin, e.byte, e.what());
  }
}

// Schema errors have no byte position in the DOM; report offset 0 and the
// JSON path in the message.
template <typename T>
T field(const json& obj, const char* key, const std::string& origin, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(origin, 0, where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(origin, 0, where + "." + key + ": " + e.what());
  }
}

}  // namespace

NetworkGraph parse_cityflow_roadnet(std::string_view text, const std::string& origin) {
  const json doc = parse_or_throw(text, origin);
  if (!doc.is_object() || !doc.contains("intersections") || !doc.contains("roads")) {
    throw ParseError(origin, 0, "roadnet must be an object with 'intersections' and 'roads'");
  }
  const json& inters = doc["intersections"];
  const json& roads = doc["roads"];
  if (!inters.is_array() || !roads.is_array()) throw ParseError(origin, 0, "'intersections' and 'roads' must be arrays");

  NetworkBuilder b;
  std::map<std::string, int> node_id;
  for (std::size_t i = 0; i < inters.size(); ++i) {
    const std::string where = "intersections[" + std::to_string(i) + "]";
    const json& it = inters[i];
    auto id = field<std::string>(it, "id", origin, where);
    double x = 0.0, y = 0.0;
    if (it.contains("point")) {
      x = field<double>(it["point"], "x", origin, where + ".point");
      y = field<double>(it["point"], "y", origin, where + ".point");
    }
    const bool is_virtual = it.value("virtual", false);
    if (node_id.count(id)) throw TopologyError(id, "duplicate intersection id");
    node_id[id] = b.add_intersection(id, is_virtual, x, y);
  }

  std::map<std::string, int> road_id;
  for (std::size_t i = 0; i < roads.size(); ++i) {
    const std::string where = "roads[" + std::to_string(i) + "]";
    const json& r = roads[i];
    auto id = field<std::string>(r, "id", origin, where);
    auto start = field<std::string>(r, "startIntersection", origin, where);
    auto end = field<std::string>(r, "endIntersection", origin, where);
    if (!node_id.count(start)) throw TopologyError(start, "road " + id + " references undefined intersection");
    if (!node_id.count(end)) throw TopologyError(end, "road " + id + " references undefined intersection");
    std::vector<std::pair<double, double>> pts;
    if (r.contains("points")) {
      for (const auto& p : r["points"]) pts.emplace_back(field<double>(p, "x", origin, where), field<double>(p, "y", origin, where));
    }
    const json lanes = r.value("lanes", json::array());
    double vmax = 0.0;
    for (const auto& l : lanes) vmax = std::max(vmax, l.value("maxSpeed", 0.0));
    const int lane_count = std::max<int>(1, static_cast<int>(lanes.size()));
    if (road_id.count(id)) throw TopologyError(id, "duplicate road id");
    road_id[id] = b.add_road(id, node_id[start], node_id[end], vmax, lane_count, pts);
  }

  auto road_ref = [&](const std::string& name) {
    auto it = road_id.find(name);
    if (it == road_id.end()) throw TopologyError(name, "reference to undefined road");
    return it->second;
  };

  for (std::size_t i = 0; i < inters.size(); ++i) {
    const std::string where = "intersections[" + std::to_string(i) + "]";
    const json& it = inters[i];
    const int node = node_id[it["id"].get<std::string>()];
    for (const auto& rn : it.value("roads", json::array())) road_ref(rn.get<std::string>());
    if (it.value("virtual", false)) continue;

    const json links = it.value("roadLinks", json::array());
    std::vector<std::pair<int, int>> link_roads;
    std::vector<Turn> link_turns;
    for (std::size_t k = 0; k < links.size(); ++k) {
      const std::string lw = where + ".roadLinks[" + std::to_string(k) + "]";
      const json& link = links[k];
      auto type = field<std::string>(link, "type", origin, lw);
      auto turn = parse_turn(type);
      if (!turn) throw ParseError(origin, 0, lw + ".type: unknown turn type '" + type + "'");
      const int in_r = road_ref(field<std::string>(link, "startRoad", origin, lw));
      const int out_r = road_ref(field<std::string>(link, "endRoad", origin, lw));
      std::set<int> start_lanes;
      for (const auto& ll : link.value("laneLinks", json::array())) start_lanes.insert(ll.value("startLaneIndex", 0));
      b.add_movement(in_r, out_r, *turn, std::max<int>(1, static_cast<int>(start_lanes.size())));
      link_roads.emplace_back(in_r, out_r);
      link_turns.push_back(*turn);
    }

    // Light phases are honoured only when each is a clean pair of
    // non-right links; anything else falls back to the standard table.
    std::vector<std::array<NetworkBuilder::RoadPair, 2>> hints;
    bool clean = true;
    if (it.contains("trafficLight") && it["trafficLight"].is_object()) {
      for (const auto& lp : it["trafficLight"].value("lightphases", json::array())) {
        std::vector<int> non_right;
        for (const auto& idx : lp.value("availableRoadLinks", json::array())) {
          if (!idx.is_number_integer()) {
            clean = false;
            continue;
          }
          const int k = idx.get<int>();
          if (k < 0 || k >= static_cast<int>(link_roads.size())) {
            clean = false;
            continue;
          }
          if (link_turns[k] != Turn::right) non_right.push_back(k);
        }
        if (non_right.empty()) continue;
        if (non_right.size() != 2) {
          clean = false;
          continue;
        }
        hints.push_back({link_roads[non_right[0]], link_roads[non_right[1]]});
      }
    }
    if (clean && !hints.empty()) b.set_phase_hints(node, std::move(hints));
  }

  return std::move(b).build();
}

NetworkGraph load_cityflow_roadnet(const std::filesystem::path& path) {
  return parse_cityflow_roadnet(read_text_file(path), path.string());
}

json export_cityflow_roadnet(const NetworkGraph& g) {
  json inters = json::array();
  for (const auto& inter : g.intersections) {
    json j;
    j["id"] = inter.name;
    j["point"] = {{"x", inter.x}, {"y", inter.y}};
    j["width"] = inter.is_virtual ? 0.0 : 10.0;
    j["virtual"] = inter.is_virtual;
    json rn = json::array();
    for (int r : inter.incoming_roads) rn.push_back(g.roads[r].name);
    for (int r : inter.outgoing_roads) rn.push_back(g.roads[r].name);
    j["roads"] = rn;
    json links = json::array();
    for (int m : inter.movements) {
      const auto& mv = g.movements[m];
      const Road& in = g.roads[mv.in_road];
      // Lane indices on the incoming road follow the order of its lane sets.
      int first_lane = 0;
      for (int ls : in.lane_sets) {
        if (ls == mv.in_lane_set) break;
        first_lane += g.lane_sets[ls].lane_count;
      }
      json lane_links = json::array();
      for (int k = 0; k < g.lane_sets[mv.in_lane_set].lane_count; ++k) {
        lane_links.push_back({{"startLaneIndex", first_lane + k}, {"endLaneIndex", 0}, {"points", json::array()}});
      }
      links.push_back({{"type", std::string(to_string(mv.turn))},
                       {"startRoad", in.name},
                       {"endRoad", g.roads[mv.out_road].name},
                       {"direction", static_cast<int>(mv.turn)},
                       {"laneLinks", lane_links}});
    }
    j["roadLinks"] = links;
    json phases = json::array();
    if (!inter.is_virtual) {
      std::vector<int> rights;
      for (std::size_t k = 0; k < inter.movements.size(); ++k) {
        if (g.movements[inter.movements[k]].turn == Turn::right) rights.push_back(static_cast<int>(k));
      }
      auto link_index = [&](int m) {
        return static_cast<int>(std::find(inter.movements.begin(), inter.movements.end(), m) - inter.movements.begin());
      };
      phases.push_back({{"time", 5}, {"availableRoadLinks", rights}});
      for (const auto& ph : inter.phases) {
        std::vector<int> avail = rights;
        avail.push_back(link_index(ph.movements[0]));
        avail.push_back(link_index(ph.movements[1]));
        phases.push_back({{"time", 30}, {"availableRoadLinks", avail}});
      }
    }
    std::vector<int> all_links(inter.movements.size());
    for (std::size_t k = 0; k < all_links.size(); ++k) all_links[k] = static_cast<int>(k);
    j["trafficLight"] = {{"roadLinkIndices", all_links}, {"lightphases", phases}};
    inters.push_back(std::move(j));
  }

  json roads = json::array();
  for (const auto& r : g.roads) {
    json pts = json::array();
    for (const auto& [x, y] : r.points) pts.push_back({{"x", x}, {"y", y}});
    json lanes = json::array();
    for (int k = 0; k < r.lane_count; ++k) lanes.push_back({{"width", 3.2}, {"maxSpeed", r.max_speed}});
    roads.push_back({{"id", r.name},
                     {"points", pts},
                     {"lanes", lanes},
                     {"startIntersection", g.intersections[r.start_node].name},
                     {"endIntersection", g.intersections[r.end_node].name}});
  }
  return json{{"intersections", inters}, {"roads", roads}};
}

std::vector<FlowEntry> parse_cityflow_flow(std::string_view text, const std::string& origin) {
  const json doc = parse_or_throw(text, origin);
  if (!doc.is_array()) throw ParseError(origin, 0, "flow file must be an array");
  std::vector<FlowEntry> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "flow[" + std::to_string(i) + "]";
    const json& f = doc[i];
    FlowEntry e;
    if (f.contains("vehicle")) e.max_speed = f["vehicle"].value("maxSpeed", e.max_speed);
    e.route = field<std::vector<std::string>>(f, "route", origin, where);
    if (e.route.empty()) throw ParseError(origin, 0, where + ".route: empty route");
    e.interval = field<double>(f, "interval", origin, where);
    e.start_time = f.value("startTime", 0.0);
    e.end_time = f.value("endTime", e.start_time);
    if (!(e.interval > 0.0)) throw ParseError(origin, 0, where + ".interval must be positive");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<FlowEntry> load_cityflow_flow(const std::filesystem::path& path) {
  return parse_cityflow_flow(read_text_file(path), path.string());
}

json export_cityflow_flow(const std::vector<FlowEntry>& flows) {
  json out = json::array();
  for (const auto& f : flows) {
    out.push_back({{"vehicle",
                    {{"length", 5.0}, {"width", 2.0}, {"maxPosAcc", 2.0}, {"maxNegAcc", 4.5}, {"usualPosAcc", 2.0},
                     {"usualNegAcc", 4.5}, {"minGap", 2.5}, {"maxSpeed", f.max_speed}, {"headwayTime", 1.5}}},
                   {"route", f.route},
                   {"interval", f.interval},
                   {"startTime", f.start_time},
                   {"endTime", f.end_time}});
  }
  return out;
}

json network_to_json(const NetworkGraph& g) {
  json j;
  json roads = json::array();
  for (const auto& r : g.roads) {
    roads.push_back({{"id", r.id},
                     {"name", r.name},
                     {"start", r.start_node},
                     {"end", r.end_node},
                     {"length", r.length},
                     {"max_speed", r.max_speed},
                     {"lane_count", r.lane_count},
                     {"points", r.points},
                     {"lane_sets", r.lane_sets},
                     {"class", static_cast<int>(r.road_class)}});
  }
  json lane_sets = json::array();
  for (const auto& ls : g.lane_sets) {
    lane_sets.push_back({{"id", ls.id},
                         {"road", ls.road},
                         {"direction", static_cast<int>(ls.direction)},
                         {"lane_count", ls.lane_count},
                         {"max_speed", ls.max_speed},
                         {"length", ls.length}});
  }
  json inters = json::array();
  for (const auto& i : g.intersections) {
    json phases = json::array();
    for (const auto& p : i.phases) phases.push_back({{"index", p.index}, {"movements", p.movements}});
    inters.push_back({{"id", i.id},
                      {"name", i.name},
                      {"virtual", i.is_virtual},
                      {"x", i.x},
                      {"y", i.y},
                      {"incoming", i.incoming_roads},
                      {"outgoing", i.outgoing_roads},
                      {"movements", i.movements},
                      {"phases", phases},
                      {"reduced_phase_set", i.reduced_phase_set}});
  }
  json moves = json::array();
  for (const auto& m : g.movements) {
    moves.push_back({{"id", m.id},
                     {"intersection", m.intersection},
                     {"in_road", m.in_road},
                     {"out_road", m.out_road},
                     {"in_lane_set", m.in_lane_set},
                     {"out_lane_sets", m.out_lane_sets},
                     {"turn", static_cast<int>(m.turn)},
                     {"approach", static_cast<int>(m.approach)}});
  }
  j["format"] = "g2p-network";
  j["version"] = 1;
  j["roads"] = roads;
  j["lane_sets"] = lane_sets;
  j["intersections"] = inters;
  j["movements"] = moves;
  j["entry_roads"] = g.entry_roads;
  j["exit_roads"] = g.exit_roads;
  j["internal_roads"] = g.internal_roads;
  return j;
}

NetworkGraph network_from_json(const json& j) {
  if (j.value("format", "") != "g2p-network") throw ConfigError("not a g2p-network document");
  NetworkGraph g;
  try {
    for (const auto& r : j.at("roads")) {
      Road road;
      road.id = r.at("id");
      road.name = r.at("name");
      road.start_node = r.at("start");
      road.end_node = r.at("end");
      road.length = r.at("length");
      road.max_speed = r.at("max_speed");
      road.lane_count = r.at("lane_count");
      road.points = r.at("points").get<std::vector<std::pair<double, double>>>();
      road.lane_sets = r.at("lane_sets").get<std::vector<int>>();
      road.road_class = static_cast<RoadClass>(r.at("class").get<int>());
      g.roads.push_back(std::move(road));
    }
    for (const auto& l : j.at("lane_sets")) {
      LaneSet ls;
      ls.id = l.at("id");
      ls.road = l.at("road");
      ls.direction = static_cast<Turn>(l.at("direction").get<int>());
      ls.lane_count = l.at("lane_count");
      ls.max_speed = l.at("max_speed");
      ls.length = l.at("length");
      g.lane_sets.push_back(ls);
    }
    for (const auto& i : j.at("intersections")) {
      Intersection inter;
      inter.id = i.at("id");
      inter.name = i.at("name");
      inter.is_virtual = i.at("virtual");
      inter.x = i.at("x");
      inter.y = i.at("y");
      inter.incoming_roads = i.at("incoming").get<std::vector<int>>();
      inter.outgoing_roads = i.at("outgoing").get<std::vector<int>>();
      inter.movements = i.at("movements").get<std::vector<int>>();
      for (const auto& p : i.at("phases")) {
        inter.phases.push_back(Phase{p.at("index").get<int>(), p.at("movements").get<std::array<int, 2>>()});
      }
      inter.reduced_phase_set = i.at("reduced_phase_set");
      g.intersections.push_back(std::move(inter));
    }
    for (const auto& m : j.at("movements")) {
      TurnMovement mv;
      mv.id = m.at("id");
      mv.intersection = m.at("intersection");
      mv.in_road = m.at("in_road");
      mv.out_road = m.at("out_road");
      mv.in_lane_set = m.at("in_lane_set");
      mv.out_lane_sets = m.at("out_lane_sets").get<std::vector<int>>();
      mv.turn = static_cast<Turn>(m.at("turn").get<int>());
      mv.approach = static_cast<Side>(m.at("approach").get<int>());
      g.movements.push_back(std::move(mv));
    }
    g.entry_roads = j.at("entry_roads").get<std::vector<int>>();
    g.exit_roads = j.at("exit_roads").get<std::vector<int>>();
    g.internal_roads = j.at("internal_roads").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed g2p-network document: ") + e.what());
  }
  g.rebuild_index();
  return g;
}

}  // namespace g2p
