#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fleetsim/cluster.hpp"
#include "fleetsim/detector.hpp"
#include "fleetsim/proximity.hpp"
#include "fleetsim/store.hpp"
#include "fleetsim/task.hpp"

namespace fleetsim {

/// Run-wide sinks the in-process pod behaviors report into; owned by the
/// scenario runner and shared with every behavior factory.
struct RuntimeMetrics {
  struct OperatorEmission {
    std::string pod_id;
    Event event;
    TaskDescription td;
  };
  struct StoreSession {
    std::string file;
    std::string correlation_key;
    SessionStats stats;
  };

  std::vector<OperatorEmission> emissions;
  std::vector<StoreSession> store_sessions;
  std::map<std::string, int> store_activations;  // file -> sessions opened
  std::uint64_t record_retries = 0;

  void note_emission(const std::string& pod_id, const Event& event, const TaskDescription& td) {
    emissions.push_back(OperatorEmission{pod_id, event, td});
  }
};

/// Forwards every envelope matching its source pattern onto a sink topic,
/// republished from this pod's node. This is the stand-in for a pair of
/// broker clients carrying one stream across the cluster.
class BridgeBehavior : public PodBehavior {
 public:
  BridgeBehavior(SimKernel& kernel, MessageBus& bus, std::string node, Topic source, Topic sink)
      : kernel_{kernel},
        bus_{bus},
        node_{std::move(node)},
        source_{std::move(source)},
        sink_{std::move(sink)} {}

  void activate() override {
    subscription_ = bus_.subscribe(
        node_, source_,
        [this](const EnvelopePtr& env) {
          MessageEnvelope out;
          out.topic = sink_;
          out.publish_time = kernel_.now();
          out.source_node = node_;
          out.schema_tag = env->schema_tag;
          out.payload = env->payload;  // byte-identical pass-through
          bus_.publish(std::move(out));
          ++forwarded_;
        },
        Reach::cluster);
  }

  void deactivate() override {
    if (subscription_) bus_.unsubscribe(subscription_);
    subscription_ = 0;
  }

  std::uint64_t forwarded() const { return forwarded_; }

 private:
  SimKernel& kernel_;
  MessageBus& bus_;
  std::string node_;
  Topic source_;
  Topic sink_;
  SubscriptionId subscription_ = 0;
  std::uint64_t forwarded_ = 0;
};

/// Pass-through action plugin: persists every matching envelope without
/// decoding it. A failed append is retried once, then counted as dropped.
class RecordingPlugin : public ActionPlugin {
 public:
  RecordingPlugin(SimKernel& kernel, RecordStore& store, std::vector<std::string> patterns,
                  RuntimeMetrics* metrics = nullptr)
      : kernel_{kernel}, store_{store}, patterns_{std::move(patterns)}, metrics_{metrics} {}

  std::string name() const override { return "recording"; }

  void on_envelope(const EnvelopePtr& env) override {
    bool matched = patterns_.empty();
    for (const auto& pattern : patterns_) {
      if (topic_matches(pattern, env->topic)) {
        matched = true;
        break;
      }
    }
    if (!matched) return;
    RecordEntry entry;
    entry.topic = env->topic;
    entry.publish_time = env->publish_time;
    entry.ingest_time = kernel_.now();
    entry.schema_tag = env->schema_tag;
    entry.payload = env->payload;
    try {
      store_.append(entry);
    } catch (const StoreIoError&) {
      if (metrics_) ++metrics_->record_retries;
      try {
        store_.append(entry);
      } catch (const StoreIoError& e) {
        store_.record_dropped();
        log::warn("recording", std::string("entry dropped after retry: ") + e.what());
      }
    }
  }

 private:
  SimKernel& kernel_;
  RecordStore& store_;
  std::vector<std::string> patterns_;
  RuntimeMetrics* metrics_;
};

/// Recording application: an event detector with a recording plugin in
/// pass-through mode. Buffered store writes are flushed once per analysis
/// period and on shutdown.
class RecorderBehavior : public PodBehavior {
 public:
  RecorderBehavior(SimKernel& kernel, MessageBus& bus, std::string node, PodSpec spec,
                   std::filesystem::path out_dir, std::shared_ptr<RuntimeMetrics> metrics)
      : kernel_{kernel},
        bus_{bus},
        node_{std::move(node)},
        spec_{std::move(spec)},
        out_dir_{std::move(out_dir)},
        metrics_{std::move(metrics)} {}

  ~RecorderBehavior() override { finish(); }

  void activate() override {
    correlation_key_ = config_value("correlation_key", "unkeyed");
    std::string revision = config_value("workload_revision", "1");
    std::filesystem::create_directories(out_dir_);
    auto file = out_dir_ / ("recording_" + correlation_key_ + "_" + revision + ".ndjson");
    int session = ++metrics_->store_activations[file.string()];
    std::string session_id = "s" + std::to_string(session);
    store_ = session == 1 ? RecordStore::create(file, session_id)
                          : RecordStore::open_append(file, session_id);

    DetectorConfig config;
    config.buffer_duration = secs(15);
    config.analysis_period = millis(100);
    config.subscriptions = spec_.subscribes;
    config.reach = Reach::cluster;
    detector_ = std::make_unique<EventDetector>(kernel_, bus_, node_, config);
    detector_->add_plugin(
        std::make_shared<RecordingPlugin>(kernel_, *store_, spec_.subscribes, metrics_.get()));
    detector_->attach();
    active_ = true;
    schedule_flush();
  }

  void deactivate() override { finish(); }

  RecordStore* store() { return store_.get(); }
  const std::string& correlation_key() const { return correlation_key_; }

 private:
  std::string config_value(const std::string& key, const std::string& fallback) const {
    auto it = spec_.config.find(key);
    return it == spec_.config.end() ? fallback : it->second;
  }

  void schedule_flush() {
    flush_event_ = kernel_.schedule_after(millis(100), [this] {
      if (!active_) return;
      if (store_) store_->flush();
      schedule_flush();
    });
  }

  void finish() {
    if (!active_) return;
    active_ = false;
    kernel_.cancel(flush_event_);
    if (detector_) detector_->detach();
    if (store_) {
      store_->close();
      for (const auto& session : store_->sessions())
        metrics_->store_sessions.push_back(
            RuntimeMetrics::StoreSession{store_->path().string(), correlation_key_, session});
    }
  }

  SimKernel& kernel_;
  MessageBus& bus_;
  std::string node_;
  PodSpec spec_;
  std::filesystem::path out_dir_;
  std::shared_ptr<RuntimeMetrics> metrics_;
  std::unique_ptr<RecordStore> store_;
  std::unique_ptr<EventDetector> detector_;
  std::string correlation_key_;
  EventHandle flush_event_;
  bool active_ = false;
};

/// Operator plugin: turns pair-entered events into deploy task descriptions
/// and pair-left events into shutdown requests, published on /operator/tasks.
/// `request` selects what gets deployed: a recording pipeline ("record") or
/// another operator application ("chain-operator").
class OperatorPlugin : public ActionPlugin {
 public:
  OperatorPlugin(SimKernel& kernel, MessageBus& bus, std::string node, std::string pod_id,
                 std::map<std::string, std::string> config,
                 std::shared_ptr<RuntimeMetrics> metrics)
      : kernel_{kernel},
        bus_{bus},
        node_{std::move(node)},
        pod_id_{std::move(pod_id)},
        config_{std::move(config)},
        metrics_{std::move(metrics)} {}

  std::string name() const override { return "operator"; }

  const std::vector<std::string>& event_filter() const override {
    static const std::vector<std::string> filter{"pair-entered", "pair-left"};
    return filter;
  }

  void on_event(const Event& event) override {
    TaskDescription td;
    td.request_id = pod_id_ + ":td-" + std::to_string(++request_counter_);
    td.correlation_key = event.correlation_key + value("key_suffix", "");
    td.issued_at = kernel_.now();
    td.requested_by = pod_id_;
    const std::string a = event.attributes.at("vehicle_a");
    const std::string b = event.attributes.at("vehicle_b");

    if (event.event_type == "pair-entered") {
      td.intent = TaskIntent::deploy;
      td.placement_hint = value("placement_hint", "cloud");
      const std::string request = value("request", "record");
      if (request == "record") {
        td.required_capabilities = {
            {"pose-bridge", 2, {{{"vehicle_id", a}}, {{"vehicle_id", b}}}},
            {"pointcloud-bridge", 2, {{{"vehicle_id", a}}, {{"vehicle_id", b}}}},
            {"recorder",
             1,
             {{{"vehicle_a", a}, {"vehicle_b", b}, {"correlation_key", td.correlation_key}}}}};
        td.data_sources = {"/cloud/vehicle/" + a + "/pose", "/cloud/vehicle/" + b + "/pose",
                           "/cloud/vehicle/" + a + "/points", "/cloud/vehicle/" + b + "/points"};
      } else if (request == "chain-operator") {
        td.required_capabilities = {
            {"chain-operator", 1, {{{"vehicle_a", a}, {"vehicle_b", b}}}}};
        td.data_sources = {"/vehicle/" + a + "/pose", "/vehicle/" + b + "/pose"};
      } else {
        throw SimError("operator plugin: unknown request kind '" + request + "'");
      }
    } else {
      td.intent = TaskIntent::shutdown;
    }

    MessageEnvelope env;
    env.topic = "/operator/tasks";
    env.publish_time = kernel_.now();
    env.source_node = node_;
    env.schema_tag = "task";
    env.payload = task_payload(td);
    bus_.publish(std::move(env));
    if (metrics_) metrics_->note_emission(pod_id_, event, td);
  }

 private:
  std::string value(const std::string& key, const std::string& fallback) const {
    auto it = config_.find(key);
    return it == config_.end() ? fallback : it->second;
  }

  SimKernel& kernel_;
  MessageBus& bus_;
  std::string node_;
  std::string pod_id_;
  std::map<std::string, std::string> config_;
  std::shared_ptr<RuntimeMetrics> metrics_;
  int request_counter_ = 0;
};

/// Operator application pod: event detector + proximity analyzer + operator
/// plugin.
class OperatorBehavior : public PodBehavior {
 public:
  OperatorBehavior(SimKernel& kernel, MessageBus& bus, std::string node, std::string pod_id,
                   PodSpec spec, std::shared_ptr<RuntimeMetrics> metrics)
      : kernel_{kernel},
        bus_{bus},
        node_{std::move(node)},
        pod_id_{std::move(pod_id)},
        spec_{std::move(spec)},
        metrics_{std::move(metrics)} {}

  void activate() override {
    DetectorConfig config;
    config.buffer_duration = secs_f(config_double("buffer_duration_s", 15.0));
    config.analysis_period = secs_f(config_double("analysis_period_ms", 100.0) / 1000.0);
    config.subscriptions =
        spec_.subscribes.empty() ? std::vector<std::string>{"/vehicle/+/pose"} : spec_.subscribes;
    config.reach = Reach::cluster;
    detector_ = std::make_unique<EventDetector>(kernel_, bus_, node_, config);

    ProximityConfig prox;
    prox.d_start = config_double("d_start", 400.0);
    prox.d_stop = config_double("d_stop", 500.0);
    prox.vehicle_ids = watched_vehicles();
    detector_->add_analyzer(std::make_unique<ProximityAnalyzer>(prox));
    detector_->add_plugin(
        std::make_shared<OperatorPlugin>(kernel_, bus_, node_, pod_id_, spec_.config, metrics_));
    detector_->attach();
  }

  void deactivate() override {
    if (detector_) detector_->detach();
  }

  EventDetector* detector() { return detector_.get(); }

 private:
  double config_double(const std::string& key, double fallback) const {
    auto it = spec_.config.find(key);
    return it == spec_.config.end() ? fallback : std::stod(it->second);
  }

  std::vector<int> watched_vehicles() const {
    std::vector<int> ids;
    auto it = spec_.config.find("lidar_ids");
    if (it != spec_.config.end()) {
      for (const auto& part : split(it->second, ',')) ids.push_back(std::stoi(part));
      return ids;
    }
    auto a = spec_.config.find("vehicle_a");
    auto b = spec_.config.find("vehicle_b");
    if (a != spec_.config.end() && b != spec_.config.end()) {
      ids.push_back(std::stoi(a->second));
      ids.push_back(std::stoi(b->second));
    }
    return ids;
  }

  SimKernel& kernel_;
  MessageBus& bus_;
  std::string node_;
  std::string pod_id_;
  PodSpec spec_;
  std::shared_ptr<RuntimeMetrics> metrics_;
  std::unique_ptr<EventDetector> detector_;
};

}  // namespace fleetsim
