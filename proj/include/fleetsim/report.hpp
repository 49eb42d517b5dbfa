#pragma once

#include <json.hpp>

namespace fleetsim {

/// Removes every measured host-time field from a report, leaving only the
/// deterministic content. Two runs with the same config and seed must agree
/// byte for byte on the result.
inline void strip_wall_clock_fields(nlohmann::json& report) {
  auto scrub_latency = [](nlohmann::json& latency) {
    latency.erase("translation_ms");
    latency.erase("storage_s");
  };
  if (report.contains("latency")) scrub_latency(report["latency"]);
  if (report.contains("episodes"))
    for (auto& episode : report["episodes"])
      if (episode.contains("latency")) scrub_latency(episode["latency"]);
  if (report.contains("decisions"))
    for (auto& decision : report["decisions"]) decision.erase("translation_ms");
  if (report.contains("store_stats"))
    for (auto& stats : report["store_stats"]) stats.erase("wall_clock_write_time_s");
  if (report.contains("detector")) {
    report["detector"].erase("analysis_mean_ms");
    report["detector"].erase("analysis_max_ms");
  }
  if (report.contains("kernel")) report["kernel"].erase("wall_clock_s");
}

inline std::string deterministic_dump(nlohmann::json report) {
  strip_wall_clock_fields(report);
  return report.dump(2);
}

}  // namespace fleetsim
