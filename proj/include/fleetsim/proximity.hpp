#pragma once

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "fleetsim/detector.hpp"
#include "fleetsim/routes.hpp"

namespace fleetsim {

inline std::string pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return "pair:" + std::to_string(a) + "-" + std::to_string(b);
}

/// Hysteresis state for one vehicle pair: IDLE until the distance drops to
/// d_start (inclusive), then ACTIVE until it exceeds d_stop.
struct PairState {
  enum class Mode { IDLE, ACTIVE };
  Mode mode = Mode::IDLE;
  double last_distance = -1.0;
};

struct ProximityConfig {
  double d_start = 400.0;  // meters, trigger (d <= d_start)
  double d_stop = 500.0;   // meters, release (d > d_stop)
  std::vector<int> vehicle_ids;                  // lidar-equipped vehicles
  std::string pose_topic_prefix = "/vehicle/";   // + "<id>/pose"
};

/// Watches the latest buffered pose of every lidar-equipped vehicle and emits
/// "pair-entered" / "pair-left" events per pair with hysteresis. A pair with
/// a vehicle that has no buffered pose yet is skipped for the cycle.
class ProximityAnalyzer : public Analyzer {
 public:
  explicit ProximityAnalyzer(ProximityConfig config) : config_{std::move(config)} {
    if (config_.d_stop <= config_.d_start) throw SimError("d_stop must exceed d_start");
  }

  std::string name() const override { return "proximity"; }

  std::vector<Event> analyze(VirtualTime now, const TimeWindowBuffer& buffer) override {
    std::vector<Event> events;
    const auto& ids = config_.vehicle_ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        auto env_a = buffer.latest(pose_topic(ids[i]));
        auto env_b = buffer.latest(pose_topic(ids[j]));
        if (!env_a || !env_b) continue;
        Pose a = pose_from_payload(env_a->payload, ids[i], env_a->publish_time);
        Pose b = pose_from_payload(env_b->payload, ids[j], env_b->publish_time);
        double d = distance_2d(a, b);
        PairState& state = pairs_[pair_key(ids[i], ids[j])];
        state.last_distance = d;
        if (state.mode == PairState::Mode::IDLE && d <= config_.d_start) {
          state.mode = PairState::Mode::ACTIVE;
          events.push_back(make_event("pair-entered", now, ids[i], ids[j], d));
        } else if (state.mode == PairState::Mode::ACTIVE && d > config_.d_stop) {
          state.mode = PairState::Mode::IDLE;
          events.push_back(make_event("pair-left", now, ids[i], ids[j], d));
        }
      }
    }
    return events;
  }

  const std::map<std::string, PairState>& pairs() const { return pairs_; }

 private:
  Topic pose_topic(int id) const { return config_.pose_topic_prefix + std::to_string(id) + "/pose"; }

  static Event make_event(const std::string& type, VirtualTime now, int a, int b, double d) {
    char dist[32];
    std::snprintf(dist, sizeof(dist), "%.3f", d);
    Event event;
    event.event_type = type;
    event.detected_at = now;
    event.correlation_key = pair_key(a, b);
    event.attributes = {{"vehicle_a", std::to_string(std::min(a, b))},
                        {"vehicle_b", std::to_string(std::max(a, b))},
                        {"distance_m", dist}};
    return event;
  }

  ProximityConfig config_;
  std::map<std::string, PairState> pairs_;
};

}  // namespace fleetsim
