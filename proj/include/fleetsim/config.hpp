#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetsim/app_manager.hpp"
#include "fleetsim/bus.hpp"
#include "fleetsim/routes.hpp"
#include "fleetsim/workload.hpp"

namespace fleetsim {

/// Everything one simulated run needs: the experiment parameters, vehicle
/// routes and references to the cluster topology and application registry.
struct ScenarioConfig {
  int N = 15;             // number of vehicles
  int M = 2;              // lidar-equipped vehicles (ids 0..M-1)
  double f_p = 100.0;     // pose frequency, Hz
  double f_pc = 10.0;     // point cloud frequency, Hz
  double d_start = 400.0; // meters, trigger distance
  double d_stop = 500.0;  // meters, stopping distance
  double duration = 75.0; // seconds of virtual time
  std::uint64_t seed = 42;
  int points_per_cloud = 1000;
  std::vector<Route> routes;  // one per vehicle id

  std::filesystem::path topology_path;
  std::filesystem::path registry_path;

  // tunables with defaults; all optional in the file
  std::string operator_request = "record";  // or "chain-operator"
  std::string conflict_strategy = "postpone";
  double retry_interval_s = 1.0;
  double analysis_period_ms = 100.0;
  double buffer_duration_s = 15.0;
  double reconcile_interval_ms = 250.0;
  double startup_latency_s = 5.0;
  double termination_latency_ms = 500.0;

  Duration pose_period() const { return hz_period(f_p); }
  Duration cloud_period() const { return hz_period(f_pc); }
  VirtualTime end_time() const { return VirtualTime::from_seconds(duration); }
};

struct TopologyNode {
  std::string node_id;
  NodeRole role = NodeRole::cloud;
  ResourceRequest capacity;
};

struct ClusterTopology {
  std::vector<TopologyNode> nodes;
  std::vector<LinkSpec> links;
};

inline nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SimError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SimError("cannot parse '" + path.string() + "': " + e.what());
  }
}

inline ClusterTopology topology_from_json(const nlohmann::json& j) {
  ClusterTopology topology;
  for (const auto& n : j.at("nodes")) {
    TopologyNode node;
    node.node_id = n.at("node_id").get<std::string>();
    node.role = node_role_from_string(n.at("role").get<std::string>());
    node.capacity.cpu_milli = n.at("capacity").at("cpu_milli").get<int>();
    node.capacity.mem_mib = n.at("capacity").at("mem_mib").get<int>();
    topology.nodes.push_back(std::move(node));
  }
  if (j.contains("links")) {
    for (const auto& l : j.at("links")) {
      LinkSpec link;
      link.endpoint_a = l.at("endpoint_a").get<std::string>();
      link.endpoint_b = l.at("endpoint_b").get<std::string>();
      link.latency = secs_f(l.value("latency", 0.0));  // seconds
      link.symmetric = l.value("symmetric", true);
      topology.links.push_back(std::move(link));
    }
  }
  return topology;
}

inline ClusterTopology load_topology(const std::filesystem::path& path) {
  return topology_from_json(load_json_file(path));
}

inline MicroserviceTemplate template_from_json(const nlohmann::json& j) {
  MicroserviceTemplate t;
  t.name = j.at("name").get<std::string>();
  for (const auto& tag : j.at("capability_tags")) t.capability_tags.insert(tag.get<std::string>());
  t.image_ref = j.at("image_ref").get<std::string>();
  t.resource_request.cpu_milli = j.at("resource_request").at("cpu_milli").get<int>();
  t.resource_request.mem_mib = j.at("resource_request").at("mem_mib").get<int>();
  if (j.contains("config_params"))
    t.config_params = j.at("config_params").get<std::map<std::string, std::string>>();
  if (j.contains("config_defaults"))
    t.config_defaults = j.at("config_defaults").get<std::map<std::string, std::string>>();
  if (j.contains("publishes")) t.publishes = j.at("publishes").get<std::vector<std::string>>();
  if (j.contains("subscribes")) t.subscribes = j.at("subscribes").get<std::vector<std::string>>();
  t.behavior_kind = behavior_kind_from_string(j.at("behavior_kind").get<std::string>());
  if (j.contains("startup_latency_s")) t.startup_latency = secs_f(j.at("startup_latency_s").get<double>());
  return t;
}

inline ServiceRegistry registry_from_json(const nlohmann::json& j) {
  ServiceRegistry registry;
  for (const auto& e : j.at("entries")) {
    RegistryEntry entry;
    entry.application_name = e.at("application_name").get<std::string>();
    entry.verified = e.at("verified").get<bool>();
    for (const auto& s : e.at("services")) entry.services.push_back(template_from_json(s));
    registry.add(std::move(entry));
  }
  return registry;
}

inline ServiceRegistry load_registry(const std::filesystem::path& path) {
  return registry_from_json(load_json_file(path));
}

inline ScenarioConfig scenario_from_json(const nlohmann::json& j,
                                         const std::filesystem::path& base_dir) {
  ScenarioConfig config;
  config.N = j.at("N").get<int>();
  config.M = j.at("M").get<int>();
  config.f_p = j.at("f_p").get<double>();
  config.f_pc = j.at("f_pc").get<double>();
  config.d_start = j.at("d_start").get<double>();
  config.d_stop = j.at("d_stop").get<double>();
  config.duration = j.at("duration").get<double>();
  config.seed = j.at("seed").get<std::uint64_t>();
  config.points_per_cloud = j.value("points_per_cloud", 1000);
  for (const auto& route_json : j.at("routes")) {
    Route route;
    for (const auto& wp : route_json)
      route.push_back(Waypoint{wp.at("x").get<double>(), wp.at("y").get<double>(),
                               wp.at("speed").get<double>()});
    config.routes.push_back(std::move(route));
  }
  config.topology_path = base_dir / j.at("topology").get<std::string>();
  config.registry_path = base_dir / j.at("registry").get<std::string>();
  config.operator_request = j.value("operator_request", "record");
  config.conflict_strategy = j.value("conflict_strategy", "postpone");
  config.retry_interval_s = j.value("retry_interval_s", 1.0);
  config.analysis_period_ms = j.value("analysis_period_ms", 100.0);
  config.buffer_duration_s = j.value("buffer_duration_s", 15.0);
  config.reconcile_interval_ms = j.value("reconcile_interval_ms", 250.0);
  config.startup_latency_s = j.value("startup_latency_s", 5.0);
  config.termination_latency_ms = j.value("termination_latency_ms", 500.0);
  return config;
}

inline ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  return scenario_from_json(load_json_file(path), path.parent_path());
}

/// All violated invariants as human-readable diagnostics; empty means valid.
inline std::vector<std::string> validate_config(const ScenarioConfig& config) {
  std::vector<std::string> diagnostics;
  auto complain = [&](const std::string& msg) { diagnostics.push_back(msg); };

  if (config.M > config.N) complain("M ≤ N violated");
  if (config.d_stop <= config.d_start) complain("d_stop must exceed d_start");
  if (config.f_p <= 0) complain("f_p must be positive");
  if (config.f_pc <= 0) complain("f_pc must be positive");
  if (config.duration <= 0) complain("duration must be positive");
  if (config.points_per_cloud < 1) complain("points_per_cloud must be at least 1");
  if (config.N < 0 || config.M < 0) complain("vehicle counts must be non-negative");
  if (static_cast<int>(config.routes.size()) != config.N)
    complain("routes must list exactly N entries (" + std::to_string(config.routes.size()) +
             " given, N=" + std::to_string(config.N) + ")");
  for (std::size_t i = 0; i < config.routes.size(); ++i) {
    if (config.routes[i].size() < 2)
      complain("route " + std::to_string(i) + " needs at least 2 waypoints");
    for (const auto& wp : config.routes[i]) {
      if (!std::isfinite(wp.x) || !std::isfinite(wp.y))
        complain("route " + std::to_string(i) + " has a non-finite coordinate");
      if (wp.speed <= 0) complain("route " + std::to_string(i) + " has a non-positive speed");
    }
  }
  if (config.buffer_duration_s * 1000.0 < 2 * config.analysis_period_ms)
    complain("buffer_duration must be at least twice the analysis period");
  if (config.analysis_period_ms <= 0) complain("analysis_period_ms must be positive");
  if (config.reconcile_interval_ms <= 0) complain("reconcile_interval_ms must be positive");
  if (config.operator_request != "record" && config.operator_request != "chain-operator")
    complain("operator_request must be 'record' or 'chain-operator'");
  try {
    conflict_strategy_from_string(config.conflict_strategy);
  } catch (const SimError& e) {
    complain(e.what());
  }

  // cross-checks against the referenced topology and registry
  try {
    ClusterTopology topology = load_topology(config.topology_path);
    bool has_cloud = false;
    std::set<std::string> ids;
    for (const auto& node : topology.nodes) {
      if (!ids.insert(node.node_id).second) complain("duplicate node '" + node.node_id + "'");
      if (node.role == NodeRole::cloud) has_cloud = true;
      if (node.capacity.cpu_milli <= 0 || node.capacity.mem_mib <= 0)
        complain("node '" + node.node_id + "' has non-positive capacity");
    }
    if (!has_cloud) complain("topology needs at least one cloud node");
    for (int i = 0; i < config.N; ++i) {
      if (!ids.count("vehicle-" + std::to_string(i)))
        complain("topology is missing node 'vehicle-" + std::to_string(i) + "'");
    }
    for (const auto& link : topology.links) {
      if (!ids.count(link.endpoint_a) || !ids.count(link.endpoint_b))
        complain("link references unknown node");
      if (link.latency < Duration{0}) complain("link latency must be non-negative");
    }
  } catch (const SimError& e) {
    complain(e.what());
  }
  try {
    load_registry(config.registry_path);
  } catch (const SimError& e) {
    complain(e.what());
  }
  return diagnostics;
}

}  // namespace fleetsim
