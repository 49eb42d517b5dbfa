#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fleetsim/buffer.hpp"
#include "fleetsim/bus.hpp"
#include "fleetsim/kernel.hpp"
#include "fleetsim/log.hpp"
#include "fleetsim/task.hpp"

namespace fleetsim {

/// Developer-defined analysis over the buffered data. Analyzers keep private
/// state across cycles (needed for transition detection such as enter/leave)
/// and must not mutate the buffer.
class Analyzer {
 public:
  virtual ~Analyzer() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Event> analyze(VirtualTime now, const TimeWindowBuffer& buffer) = 0;
};

/// Consequence of a detected event, and optionally a pass-through consumer of
/// raw envelopes (recording).
class ActionPlugin {
 public:
  virtual ~ActionPlugin() = default;
  virtual std::string name() const = 0;

  /// Event types this plugin wants; empty means all.
  virtual const std::vector<std::string>& event_filter() const {
    static const std::vector<std::string> all;
    return all;
  }

  virtual void on_event(const Event&) {}

  /// Called for every envelope delivered to the detector, before buffering.
  /// Pass-through consumers (recording) implement this.
  virtual void on_envelope(const EnvelopePtr&) {}
};

struct DetectorConfig {
  Duration buffer_duration = secs(15);
  Duration analysis_period = millis(100);
  std::vector<std::string> subscriptions;
  Reach reach = Reach::node;
};

struct DetectorStats {
  std::uint64_t envelopes_ingested = 0;
  std::uint64_t cycles = 0;
  std::uint64_t events_emitted = 0;
  std::uint64_t analyzer_failures = 0;
  std::uint64_t plugin_failures = 0;
  // measured host time spent in analysis, not simulated time
  std::chrono::nanoseconds analysis_wall_total{0};
  std::chrono::nanoseconds analysis_wall_max{0};

  double analysis_mean_ms() const {
    return cycles == 0 ? 0.0
                       : static_cast<double>(analysis_wall_total.count()) / 1e6 /
                             static_cast<double>(cycles);
  }
  double analysis_max_ms() const { return static_cast<double>(analysis_wall_max.count()) / 1e6; }
};

/// Buffers incoming envelopes for a bounded window, periodically runs the
/// registered analyzers over the buffer, and dispatches detected events to
/// action plugins. A failing analyzer or plugin never suppresses the others.
class EventDetector {
 public:
  EventDetector(SimKernel& kernel, MessageBus& bus, std::string node, DetectorConfig config)
      : kernel_{kernel},
        bus_{bus},
        node_{std::move(node)},
        config_{std::move(config)},
        buffer_{config_.buffer_duration} {
    if (config_.subscriptions.empty()) throw SimError("detector needs at least one subscription");
    if (config_.analysis_period <= Duration{0}) throw SimError("analysis period must be positive");
  }

  ~EventDetector() { detach(); }

  EventDetector(const EventDetector&) = delete;
  EventDetector& operator=(const EventDetector&) = delete;

  void add_analyzer(std::unique_ptr<Analyzer> analyzer) {
    analyzers_.push_back(std::move(analyzer));
  }

  void add_plugin(std::shared_ptr<ActionPlugin> plugin) { plugins_.push_back(std::move(plugin)); }

  /// Subscribes on the bus and starts the periodic analysis cycle.
  void attach() {
    if (attached_) return;
    attached_ = true;
    for (const auto& pattern : config_.subscriptions) {
      subscription_ids_.push_back(bus_.subscribe(
          node_, pattern, [this](const EnvelopePtr& env) { ingest(env); }, config_.reach));
    }
    schedule_cycle();
  }

  /// Stops ingestion and analysis; anything in flight is dropped.
  void detach() {
    if (!attached_) return;
    attached_ = false;
    for (auto id : subscription_ids_) bus_.unsubscribe(id);
    subscription_ids_.clear();
    kernel_.cancel(cycle_event_);
  }

  bool attached() const { return attached_; }

  void ingest(const EnvelopePtr& envelope) {
    ++stats_.envelopes_ingested;
    for (auto& plugin : plugins_) {
      try {
        plugin->on_envelope(envelope);
      } catch (const std::exception& e) {
        ++stats_.plugin_failures;
        log::warn("detector", "plugin '" + plugin->name() + "' failed on envelope: " + e.what());
      }
    }
    buffer_.ingest(envelope, kernel_.now());
  }

  /// Runs every analyzer once over the current buffer; returns all events in
  /// analyzer-declaration order and dispatches them.
  std::vector<Event> analysis_cycle() {
    VirtualTime now = kernel_.now();
    buffer_.advance(now);
    std::vector<Event> events;
    auto wall_start = std::chrono::steady_clock::now();
    for (auto& analyzer : analyzers_) {
      try {
        auto found = analyzer->analyze(now, buffer_);
        events.insert(events.end(), found.begin(), found.end());
      } catch (const std::exception& e) {
        ++stats_.analyzer_failures;
        log::warn("detector", "analyzer '" + analyzer->name() + "' failed: " + e.what());
      }
    }
    auto wall = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - wall_start);
    ++stats_.cycles;
    stats_.analysis_wall_total += wall;
    if (wall > stats_.analysis_wall_max) stats_.analysis_wall_max = wall;
    for (const Event& event : events) dispatch(event);
    return events;
  }

  void dispatch(const Event& event) {
    ++stats_.events_emitted;
    for (auto& plugin : plugins_) {
      const auto& filter = plugin->event_filter();
      if (!filter.empty() &&
          std::find(filter.begin(), filter.end(), event.event_type) == filter.end())
        continue;
      try {
        plugin->on_event(event);
      } catch (const std::exception& e) {
        ++stats_.plugin_failures;
        log::warn("detector", "plugin '" + plugin->name() + "' failed on event '" +
                                  event.event_type + "': " + e.what());
      }
    }
  }

  const TimeWindowBuffer& buffer() const { return buffer_; }
  const DetectorStats& stats() const { return stats_; }
  const DetectorConfig& config() const { return config_; }
  const std::string& node() const { return node_; }

 private:
  void schedule_cycle() {
    cycle_event_ = kernel_.schedule_after(config_.analysis_period, [this] {
      if (!attached_) return;
      analysis_cycle();
      schedule_cycle();
    });
  }

  SimKernel& kernel_;
  MessageBus& bus_;
  std::string node_;
  DetectorConfig config_;
  TimeWindowBuffer buffer_;
  std::vector<std::unique_ptr<Analyzer>> analyzers_;
  std::vector<std::shared_ptr<ActionPlugin>> plugins_;
  std::vector<SubscriptionId> subscription_ids_;
  EventHandle cycle_event_;
  bool attached_ = false;
  DetectorStats stats_;
};

}  // namespace fleetsim
