#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fleetsim/time.hpp"
#include "fleetsim/topic.hpp"

namespace fleetsim {

enum class NodeRole { cloud, vehicle, rsu, edge };

inline const char* to_string(NodeRole role) {
  switch (role) {
    case NodeRole::cloud: return "cloud";
    case NodeRole::vehicle: return "vehicle";
    case NodeRole::rsu: return "rsu";
    default: return "edge";
  }
}

inline NodeRole node_role_from_string(const std::string& s) {
  if (s == "cloud") return NodeRole::cloud;
  if (s == "vehicle") return NodeRole::vehicle;
  if (s == "rsu") return NodeRole::rsu;
  if (s == "edge") return NodeRole::edge;
  throw SimError("unknown node role '" + s + "'");
}

struct ResourceRequest {
  int cpu_milli = 0;
  int mem_mib = 0;

  bool fits_within(const ResourceRequest& other) const {
    return cpu_milli <= other.cpu_milli && mem_mib <= other.mem_mib;
  }
  ResourceRequest operator+(const ResourceRequest& o) const {
    return {cpu_milli + o.cpu_milli, mem_mib + o.mem_mib};
  }
  ResourceRequest operator-(const ResourceRequest& o) const {
    return {cpu_milli - o.cpu_milli, mem_mib - o.mem_mib};
  }
  bool operator==(const ResourceRequest&) const = default;
};

/// Behavior a pod exhibits once Running. Bridges forward one topic across the
/// cluster, recorders persist matching envelopes, operators run an event
/// detector with an operator plugin. Generic pods only consume capacity.
enum class BehaviorKind { bridge, recorder, operator_, generic };

inline const char* to_string(BehaviorKind kind) {
  switch (kind) {
    case BehaviorKind::bridge: return "bridge";
    case BehaviorKind::recorder: return "recorder";
    case BehaviorKind::operator_: return "operator";
    default: return "generic";
  }
}

inline BehaviorKind behavior_kind_from_string(const std::string& s) {
  if (s == "bridge") return BehaviorKind::bridge;
  if (s == "recorder") return BehaviorKind::recorder;
  if (s == "operator") return BehaviorKind::operator_;
  if (s == "generic") return BehaviorKind::generic;
  throw SimError("unknown behavior kind '" + s + "'");
}

/// Template of one containerized microservice as published in a registry.
/// Topic templates may contain {placeholders} resolved at composition time.
struct MicroserviceTemplate {
  std::string name;
  std::set<std::string> capability_tags;
  std::string image_ref;
  ResourceRequest resource_request;
  std::map<std::string, std::string> config_params;    // key -> type name
  std::map<std::string, std::string> config_defaults;  // optional default values
  std::vector<std::string> publishes;                  // topic templates
  std::vector<std::string> subscribes;                 // topic templates
  BehaviorKind behavior_kind = BehaviorKind::generic;
  std::optional<Duration> startup_latency;  // overrides the cluster default
};

struct RegistryEntry {
  std::string application_name;
  std::vector<MicroserviceTemplate> services;
  bool verified = false;
};

/// Static catalog of applications available for deployment. Only verified
/// entries are selectable.
class ServiceRegistry {
 public:
  void add(RegistryEntry entry) { entries_.push_back(std::move(entry)); }

  const std::vector<RegistryEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Verified templates carrying the capability tag, sorted by template name.
  std::vector<const MicroserviceTemplate*> find_capability(const std::string& tag) const {
    std::vector<const MicroserviceTemplate*> out;
    for (const auto& entry : entries_) {
      if (!entry.verified) continue;
      for (const auto& tmpl : entry.services) {
        if (tmpl.capability_tags.count(tag)) out.push_back(&tmpl);
      }
    }
    std::sort(out.begin(), out.end(),
              [](const MicroserviceTemplate* a, const MicroserviceTemplate* b) {
                return a->name < b->name;
              });
    return out;
  }

  /// True if some entry (verified or not) carries the tag; used to
  /// distinguish "unsatisfiable" from "unverified only".
  bool any_entry_has(const std::string& tag) const {
    for (const auto& entry : entries_)
      for (const auto& tmpl : entry.services)
        if (tmpl.capability_tags.count(tag)) return true;
    return false;
  }

 private:
  std::vector<RegistryEntry> entries_;
};

/// One concrete pod in a workload: every placeholder resolved, placed either
/// on an explicit node or constrained to a node role.
struct PodSpec {
  std::string pod_name;
  std::string image_ref;
  std::optional<std::string> target_node;
  std::optional<NodeRole> node_role;
  ResourceRequest resource_request;
  std::map<std::string, std::string> config;  // resolved key -> value
  std::vector<Topic> subscribes;
  std::vector<Topic> publishes;
  BehaviorKind behavior_kind = BehaviorKind::generic;
  std::optional<Duration> startup_latency;
};

/// Concrete desired state for one application instance.
struct WorkloadDefinition {
  std::string owner;  // application instance id
  int revision = 0;
  std::vector<PodSpec> pods;
};

}  // namespace fleetsim
