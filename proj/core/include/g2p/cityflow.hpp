#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "g2p/network.hpp"

namespace g2p {

/// Reads the CityFlow `roadnet.json` subset: intersections (id, point,
/// virtual, roads, roadLinks, trafficLight.lightphases) and roads (id,
/// startIntersection, endIntersection, points, lanes[].maxSpeed). Lane links
/// are grouped into homogeneous lane sets by (road, turn type).
NetworkGraph load_cityflow_roadnet(const std::filesystem::path& path);
NetworkGraph parse_cityflow_roadnet(std::string_view text, const std::string& origin);

/// Writes a graph back in CityFlow roadnet form (lane links are synthesized
/// from lane-set lane counts).
nlohmann::json export_cityflow_roadnet(const NetworkGraph& graph);

/// One entry of a CityFlow `flow.json`: vehicles spawn at start_time,
/// start_time + interval, ... up to end_time (inclusive).
struct FlowEntry {
  double max_speed = 11.111;
  std::vector<std::string> route;  // road ids
  double interval = 1.0;
  double start_time = 0.0;
  double end_time = 0.0;

  bool operator==(const FlowEntry&) const = default;
};

std::vector<FlowEntry> load_cityflow_flow(const std::filesystem::path& path);
std::vector<FlowEntry> parse_cityflow_flow(std::string_view text, const std::string& origin);
nlohmann::json export_cityflow_flow(const std::vector<FlowEntry>& flows);

/// Native lossless graph serialization.
nlohmann::json network_to_json(const NetworkGraph& graph);
NetworkGraph network_from_json(const nlohmann::json& j);

/// Reads a whole file; throws ConfigError when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace g2p
