#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetsim/time.hpp"
#include "fleetsim/topic.hpp"

namespace fleetsim {

/// A detected pattern occurrence in the cluster data stream.
struct Event {
  std::string event_type;
  VirtualTime detected_at;
  std::string correlation_key;
  // ordered map so serialized attributes are stable
  std::map<std::string, std::string> attributes;
};

enum class TaskIntent { deploy, reconfigure, shutdown };

inline const char* to_string(TaskIntent intent) {
  switch (intent) {
    case TaskIntent::deploy: return "deploy";
    case TaskIntent::reconfigure: return "reconfigure";
    default: return "shutdown";
  }
}

inline TaskIntent task_intent_from_string(const std::string& s) {
  if (s == "deploy") return TaskIntent::deploy;
  if (s == "reconfigure") return TaskIntent::reconfigure;
  if (s == "shutdown") return TaskIntent::shutdown;
  throw SimError("unknown task intent '" + s + "'");
}

/// One required capability with multiplicity. `params` holds per-instance
/// parameter maps: empty for none, one map shared by all instances, or
/// exactly `count` maps.
struct CapabilityRequirement {
  std::string tag;
  int count = 1;
  std::vector<std::map<std::string, std::string>> params;
};

/// High-level application request emitted by an operator plugin. An intent,
/// not an obligation — the application manager decides what to do with it.
struct TaskDescription {
  std::string request_id;
  std::string correlation_key;
  TaskIntent intent = TaskIntent::deploy;
  std::vector<CapabilityRequirement> required_capabilities;
  std::vector<Topic> data_sources;
  std::optional<std::string> placement_hint;  // node role: cloud / vehicle / rsu / edge
  VirtualTime issued_at;
  std::string requested_by;  // pod id of the emitting operator, for ownership tracking
};

inline nlohmann::json to_json(const TaskDescription& td) {
  nlohmann::json caps = nlohmann::json::array();
  for (const auto& c : td.required_capabilities) {
    caps.push_back({{"tag", c.tag}, {"count", c.count}, {"params", c.params}});
  }
  nlohmann::json j{{"request_id", td.request_id},
                   {"correlation_key", td.correlation_key},
                   {"intent", to_string(td.intent)},
                   {"required_capabilities", caps},
                   {"data_sources", td.data_sources},
                   {"issued_at", td.issued_at.ns()},
                   {"requested_by", td.requested_by}};
  if (td.placement_hint) j["placement_hint"] = *td.placement_hint;
  return j;
}

inline TaskDescription task_from_json(const nlohmann::json& j) {
  TaskDescription td;
  td.request_id = j.at("request_id").get<std::string>();
  td.correlation_key = j.at("correlation_key").get<std::string>();
  td.intent = task_intent_from_string(j.at("intent").get<std::string>());
  for (const auto& c : j.at("required_capabilities")) {
    CapabilityRequirement cap;
    cap.tag = c.at("tag").get<std::string>();
    cap.count = c.at("count").get<int>();
    if (c.contains("params"))
      cap.params = c.at("params").get<std::vector<std::map<std::string, std::string>>>();
    td.required_capabilities.push_back(std::move(cap));
  }
  td.data_sources = j.at("data_sources").get<std::vector<std::string>>();
  if (j.contains("placement_hint")) td.placement_hint = j.at("placement_hint").get<std::string>();
  td.issued_at = VirtualTime::from_ns(j.at("issued_at").get<std::int64_t>());
  if (j.contains("requested_by")) td.requested_by = j.at("requested_by").get<std::string>();
  return td;
}

inline std::vector<std::uint8_t> task_payload(const TaskDescription& td) {
  std::string s = to_json(td).dump();
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

inline TaskDescription task_from_payload(const std::vector<std::uint8_t>& payload) {
  return task_from_json(nlohmann::json::parse(payload.begin(), payload.end()));
}

}  // namespace fleetsim
