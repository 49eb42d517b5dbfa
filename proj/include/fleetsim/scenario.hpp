#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fleetsim/app_manager.hpp"
#include "fleetsim/behaviors.hpp"
#include "fleetsim/config.hpp"
#include "fleetsim/report.hpp"

namespace fleetsim {

/// Deterministic synthetic lidar frame: `points` xyz triples of little-endian
/// float32, derived purely from (seed, vehicle, t).
inline std::vector<std::uint8_t> synth_cloud_payload(std::uint64_t seed, int vehicle_id,
                                                     VirtualTime t, int points) {
  if (points < 1) throw SimError("points_per_cloud must be at least 1");
  std::vector<std::uint8_t> payload;
  payload.reserve(static_cast<std::size_t>(points) * 12);
  std::uint64_t state = hash_combine(hash_combine(seed, static_cast<std::uint64_t>(vehicle_id)),
                                     static_cast<std::uint64_t>(t.ns()));
  auto next_unit = [&state] {
    state = splitmix64(state);
    return static_cast<float>(state >> 40) / static_cast<float>(1 << 24);
  };
  for (int p = 0; p < points; ++p) {
    wire::put_f32(payload, next_unit() * 200.0f - 100.0f);
    wire::put_f32(payload, next_unit() * 200.0f - 100.0f);
    wire::put_f32(payload, next_unit() * 10.0f);
  }
  return payload;
}

/// Reference transition times for every lidar pair, evaluated on the pose
/// sampling grid over the true routes. The reported detection delay is the
/// gap between these and the detector's emissions.
struct PairConditionTimes {
  std::map<std::string, std::vector<VirtualTime>> enters;
  std::map<std::string, std::vector<VirtualTime>> leaves;
};

inline PairConditionTimes pair_condition_times(const ScenarioConfig& config) {
  PairConditionTimes out;
  Duration step = config.pose_period();
  for (int i = 0; i < config.M; ++i) {
    for (int j = i + 1; j < config.M; ++j) {
      std::string key = pair_key(i, j);
      bool active = false;
      for (VirtualTime t; t <= config.end_time(); t += step) {
        Pose a = pose_on_route(config.routes[static_cast<std::size_t>(i)], i, t);
        Pose b = pose_on_route(config.routes[static_cast<std::size_t>(j)], j, t);
        double d = distance_2d(a, b);
        if (!active && d <= config.d_start) {
          active = true;
          out.enters[key].push_back(t);
        } else if (active && d > config.d_stop) {
          active = false;
          out.leaves[key].push_back(t);
        }
      }
    }
  }
  return out;
}

/// A fully wired simulated run: cluster, bus, vehicle data sources, the
/// cloud-side operator application and the application manager. Construction
/// builds everything at t=0; run() drives the kernel to the configured end.
class ScenarioRuntime {
 public:
  static constexpr const char* kBootstrapOwner = "boot";

  ScenarioRuntime(ScenarioConfig config, std::filesystem::path out_dir)
      : config_{std::move(config)},
        out_dir_{std::move(out_dir)},
        kernel_{config_.seed},
        bus_{kernel_},
        cluster_{kernel_, ControlPlaneConfig{secs_f(config_.reconcile_interval_ms / 1000.0),
                                             secs_f(config_.startup_latency_s),
                                             secs_f(config_.termination_latency_ms / 1000.0)}},
        metrics_{std::make_shared<RuntimeMetrics>()} {
    build();
  }

  void run() {
    kernel_.run_until(config_.end_time());
    finalize();
  }

  nlohmann::json report() const { return build_report(); }

  SimKernel& kernel() { return kernel_; }
  MessageBus& bus() { return bus_; }
  ControlPlane& cluster() { return cluster_; }
  ApplicationManager& manager() { return *manager_; }
  RuntimeMetrics& metrics() { return *metrics_; }
  const ScenarioConfig& config() const { return config_; }
  const std::string& cloud_node() const { return cloud_node_; }
  std::string bootstrap_operator_pod() const {
    return ControlPlane::pod_id_for(kBootstrapOwner, "operator-0");
  }

  /// Pod ids of every dynamically launched pod (owner != bootstrap).
  std::vector<std::string> dynamic_pods() const {
    std::vector<std::string> out;
    for (const auto& pod : cluster_.cluster_view().pods) {
      if (pod.owner != kBootstrapOwner) out.push_back(pod.pod_id);
    }
    return out;
  }

 private:
  void build() {
    topology_ = load_topology(config_.topology_path);
    for (const auto& node : topology_.nodes) {
      bus_.add_node(node.node_id);
      cluster_.add_node(node.node_id, node.role, node.capacity);
      if (node.role == NodeRole::cloud && (cloud_node_.empty() || node.node_id < cloud_node_))
        cloud_node_ = node.node_id;
      node_roles_[node.node_id] = node.role;
    }
    if (cloud_node_.empty()) throw SimError("topology has no cloud node");
    for (const auto& link : topology_.links) bus_.set_link(link);

    install_behaviors();
    install_gating_tap();

    AppManagerConfig manager_config;
    manager_config.strategy = conflict_strategy_from_string(config_.conflict_strategy);
    manager_config.retry_interval = secs_f(config_.retry_interval_s);
    manager_ = std::make_unique<ApplicationManager>(kernel_, bus_, cluster_,
                                                    load_registry(config_.registry_path),
                                                    cloud_node_, manager_config);
    manager_->attach();
    cluster_.start();
    bootstrap_operator_application();
    start_vehicle_sources();
  }

  void install_behaviors() {
    cluster_.register_behavior(
        BehaviorKind::bridge,
        [this](const PodSpec& spec, const std::string& node, const std::string&) {
          if (spec.subscribes.empty() || spec.publishes.empty())
            throw SimError("bridge pod '" + spec.pod_name + "' needs source and sink topics");
          return std::make_unique<BridgeBehavior>(kernel_, bus_, node, spec.subscribes.front(),
                                                  spec.publishes.front());
        });
    cluster_.register_behavior(
        BehaviorKind::recorder,
        [this](const PodSpec& spec, const std::string& node, const std::string&) {
          return std::make_unique<RecorderBehavior>(kernel_, bus_, node, spec, out_dir_, metrics_);
        });
    cluster_.register_behavior(
        BehaviorKind::operator_,
        [this](const PodSpec& spec, const std::string& node, const std::string& pod_id) {
          return std::make_unique<OperatorBehavior>(kernel_, bus_, node, pod_id, spec, metrics_);
        });
  }

  /// Counts point-cloud envelopes reaching cloud nodes; the gating check
  /// compares these against the bridge Running windows after the run.
  void install_gating_tap() {
    bus_.set_delivery_tap(
        [this](const MessageEnvelope& env, const std::string& dest, VirtualTime at) {
          if (env.schema_tag != "pointcloud") return;
          auto it = node_roles_.find(dest);
          if (it != node_roles_.end() && it->second == NodeRole::cloud)
            pointcloud_cloud_deliveries_.push_back(at);
        });
  }

  /// The pre-provisioned cloud operator application, operational from t=0.
  void bootstrap_operator_application() {
    PodSpec op;
    op.pod_name = "operator-0";
    op.image_ref = "registry.local/proximity-operator:1";
    op.target_node = cloud_node_;
    op.resource_request = {250, 512};
    op.behavior_kind = BehaviorKind::operator_;
    op.subscribes = {"/vehicle/+/pose"};
    std::string lidar_ids;
    for (int i = 0; i < config_.M; ++i) lidar_ids += (i ? "," : "") + std::to_string(i);
    char d_start[32], d_stop[32];
    std::snprintf(d_start, sizeof(d_start), "%g", config_.d_start);
    std::snprintf(d_stop, sizeof(d_stop), "%g", config_.d_stop);
    op.config = {{"request", config_.operator_request},
                 {"lidar_ids", lidar_ids},
                 {"d_start", d_start},
                 {"d_stop", d_stop},
                 {"analysis_period_ms", std::to_string(config_.analysis_period_ms)},
                 {"buffer_duration_s", std::to_string(config_.buffer_duration_s)},
                 {"placement_hint", "cloud"}};
    WorkloadDefinition boot;
    boot.owner = kBootstrapOwner;
    boot.pods = {op};
    cluster_.bootstrap(boot);
  }

  /// Vehicle data sources: poses from every vehicle at f_p, point clouds from
  /// the lidar-equipped ones at f_pc, published on the vehicle's own node.
  void start_vehicle_sources() {
    for (int i = 0; i < config_.N; ++i) schedule_pose(i, VirtualTime{});
    for (int i = 0; i < config_.M; ++i) schedule_cloud(i, VirtualTime{});
  }

  void schedule_pose(int vehicle, VirtualTime at) {
    if (at > config_.end_time()) return;
    kernel_.schedule(at, [this, vehicle, at] {
      Pose pose = pose_on_route(config_.routes[static_cast<std::size_t>(vehicle)], vehicle, at);
      MessageEnvelope env;
      env.topic = "/vehicle/" + std::to_string(vehicle) + "/pose";
      env.publish_time = at;
      env.source_node = "vehicle-" + std::to_string(vehicle);
      env.schema_tag = "pose";
      env.payload = pose_payload(pose);
      bus_.publish(std::move(env));
      schedule_pose(vehicle, at + config_.pose_period());
    });
  }

  void schedule_cloud(int vehicle, VirtualTime at) {
    if (at > config_.end_time()) return;
    kernel_.schedule(at, [this, vehicle, at] {
      MessageEnvelope env;
      env.topic = "/vehicle/" + std::to_string(vehicle) + "/points";
      env.publish_time = at;
      env.source_node = "vehicle-" + std::to_string(vehicle);
      env.schema_tag = "pointcloud";
      env.payload =
          synth_cloud_payload(config_.seed, vehicle, at, config_.points_per_cloud);
      bus_.publish(std::move(env));
      schedule_cloud(vehicle, at + config_.cloud_period());
    });
  }

  /// Closes any still-running recording stores so their stats are collected.
  void finalize() {
    if (finalized_) return;
    finalized_ = true;
    for (const auto& pod : cluster_.cluster_view().pods) {
      if (auto* behavior = cluster_.find_behavior(pod.pod_id)) {
        if (auto* recorder = dynamic_cast<RecorderBehavior*>(behavior)) recorder->deactivate();
      }
    }
  }

  struct EpisodeRow {
    std::string pair;
    std::string correlation_key;
    VirtualTime t_enter;
    std::optional<VirtualTime> t_leave;
    std::string request_id;
  };

  nlohmann::json build_report() const {
    nlohmann::json report;
    report["schema"] = "fleetsim-report/1";
    report["config"] = {{"N", config_.N},
                        {"M", config_.M},
                        {"f_p", config_.f_p},
                        {"f_pc", config_.f_pc},
                        {"d_start", config_.d_start},
                        {"d_stop", config_.d_stop},
                        {"duration", config_.duration},
                        {"seed", config_.seed},
                        {"points_per_cloud", config_.points_per_cloud},
                        {"operator_request", config_.operator_request}};

    // episodes from the bootstrap operator's emissions
    std::vector<EpisodeRow> rows;
    const std::string boot_pod = bootstrap_operator_pod();
    for (const auto& emission : metrics_->emissions) {
      if (emission.pod_id != boot_pod) continue;
      if (emission.event.event_type == "pair-entered") {
        rows.push_back(EpisodeRow{emission.event.correlation_key, emission.td.correlation_key,
                                  emission.td.issued_at, std::nullopt, emission.td.request_id});
      } else if (emission.event.event_type == "pair-left") {
        for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
          if (it->pair == emission.event.correlation_key && !it->t_leave) {
            it->t_leave = emission.td.issued_at;
            break;
          }
        }
      }
    }

    PairConditionTimes truth = pair_condition_times(config_);
    std::map<std::string, std::size_t> enter_ordinal;

    nlohmann::json episodes = nlohmann::json::array();
    nlohmann::json top_latency = {{"detection_ms", nullptr},
                                  {"translation_ms", nullptr},
                                  {"reconciliation_s", nullptr},
                                  {"storage_s", nullptr}};
    for (const auto& row : rows) {
      nlohmann::json episode;
      episode["pair"] = row.pair;
      episode["t_enter"] = row.t_enter.seconds();
      if (row.t_leave) episode["t_leave"] = row.t_leave->seconds();

      nlohmann::json latency{{"detection_ms", nullptr},
                             {"translation_ms", nullptr},
                             {"reconciliation_s", nullptr},
                             {"storage_s", nullptr}};
      std::size_t ordinal = enter_ordinal[row.pair]++;
      auto truth_it = truth.enters.find(row.pair);
      if (truth_it != truth.enters.end() && ordinal < truth_it->second.size())
        latency["detection_ms"] = to_millis(row.t_enter - truth_it->second[ordinal]);

      const Decision* final_decision = nullptr;
      for (const auto& decision : manager_->decisions()) {
        if (decision.request_id == row.request_id) final_decision = &decision;
      }
      if (final_decision) {
        episode["decision"] = to_string(final_decision->kind);
        latency["translation_ms"] =
            static_cast<double>(final_decision->translation_wall.count()) / 1e6;
        if (!final_decision->instance_id.empty()) {
          episode["instance_id"] = final_decision->instance_id;
          const auto& instances = manager_->instances();
          auto inst_it = instances.find(final_decision->instance_id);
          if (inst_it != instances.end()) {
            const ApplicationInstance& instance = inst_it->second;
            if (instance.all_running_at)
              latency["reconciliation_s"] = to_seconds(*instance.all_running_at - instance.applied_at);
            episode["teardown_complete"] = instance.state == InstanceState::terminated;
          }
        }
      }

      double storage_wall = 0.0;
      std::uint64_t stored_entries = 0;
      for (const auto& session : metrics_->store_sessions) {
        if (session.correlation_key.rfind(row.correlation_key, 0) == 0) {
          storage_wall += static_cast<double>(session.stats.wall_clock_write_time.count()) / 1e9;
          stored_entries += session.stats.entries_written;
        }
      }
      latency["storage_s"] = storage_wall;
      episode["stored_entries"] = stored_entries;
      episode["latency"] = latency;
      if (episodes.empty()) top_latency = latency;
      episodes.push_back(std::move(episode));
    }
    report["episodes"] = episodes;
    report["latency"] = top_latency;

    nlohmann::json decisions = nlohmann::json::array();
    for (const auto& decision : manager_->decisions()) {
      nlohmann::json d{{"request_id", decision.request_id},
                       {"correlation_key", decision.correlation_key},
                       {"intent", decision.intent},
                       {"kind", to_string(decision.kind)},
                       {"reason", decision.reason},
                       {"decided_at", decision.decided_at.seconds()},
                       {"translation_ms", static_cast<double>(decision.translation_wall.count()) / 1e6}};
      if (!decision.instance_id.empty()) d["instance_id"] = decision.instance_id;
      if (decision.retry_at) d["retry_at"] = decision.retry_at->seconds();
      decisions.push_back(std::move(d));
    }
    report["decisions"] = decisions;

    nlohmann::json stores = nlohmann::json::array();
    for (const auto& session : metrics_->store_sessions) {
      stores.push_back(
          {{"file", std::filesystem::path(session.file).filename().string()},
           {"correlation_key", session.correlation_key},
           {"session_id", session.stats.session_id},
           {"entries_written", session.stats.entries_written},
           {"bytes_written", session.stats.bytes_written},
           {"wall_clock_write_time_s",
            static_cast<double>(session.stats.wall_clock_write_time.count()) / 1e9},
           {"dropped", session.stats.dropped}});
    }
    report["store_stats"] = stores;

    report["gating"] = gating_json();
    report["instances"] = instances_json();
    report["detector"] = detector_json();

    const auto& ks = kernel_.stats();
    report["kernel"] = {{"events_fired", ks.events_fired},
                        {"events_cancelled", ks.events_cancelled},
                        {"final_time_s", ks.final_time.seconds()},
                        {"wall_clock_s", static_cast<double>(ks.wall_clock_elapsed.count()) / 1e9}};
    report["cluster"] = {{"dynamic_pods_launched", dynamic_pods_launched()},
                         {"failures_injected", cluster_.failures_injected()},
                         {"record_retries", metrics_->record_retries}};
    return report;
  }

  nlohmann::json gating_json() const {
    // windows during which some point-cloud bridge is operational
    std::vector<std::pair<VirtualTime, VirtualTime>> windows;
    for (const auto& pod : cluster_.cluster_view().pods) {
      const PodSpec* spec = cluster_.find_pod_spec(pod.pod_id);
      if (!spec || spec->behavior_kind != BehaviorKind::bridge) continue;
      bool points_bridge = false;
      for (const auto& topic : spec->publishes)
        if (topic.size() > 7 && topic.rfind("/points") == topic.size() - 7) points_bridge = true;
      if (!points_bridge) continue;
      std::optional<VirtualTime> open;
      for (const auto& [phase, at] : cluster_.phase_history(pod.pod_id)) {
        if (phase == PodPhase::Running && !open) open = at;
        if (open && (phase == PodPhase::Failed || phase == PodPhase::Terminated)) {
          windows.emplace_back(*open, at);
          open.reset();
        }
      }
      if (open) windows.emplace_back(*open, VirtualTime::from_ns(std::numeric_limits<std::int64_t>::max()));
    }
    std::uint64_t outside = 0;
    for (VirtualTime at : pointcloud_cloud_deliveries_) {
      bool inside = false;
      for (const auto& [from, to] : windows)
        if (at >= from && at <= to) {
          inside = true;
          break;
        }
      if (!inside) ++outside;
    }
    return {{"pointcloud_to_cloud_total", pointcloud_cloud_deliveries_.size()},
            {"pointcloud_to_cloud_outside_window", outside}};
  }

  nlohmann::json instances_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [id, instance] : manager_->instances()) {
      nlohmann::json j{{"instance_id", id},
                       {"correlation_key", instance.correlation_key},
                       {"state", to_string(instance.state)},
                       {"workload_revision", instance.workload_revision},
                       {"owned_pods", instance.owned_pods},
                       {"requested_by", instance.requested_by}};
      if (instance.all_running_at) j["all_running_at"] = instance.all_running_at->seconds();
      if (instance.terminated_at) j["terminated_at"] = instance.terminated_at->seconds();
      out.push_back(std::move(j));
    }
    return out;
  }

  nlohmann::json detector_json() const {
    auto* behavior = const_cast<ControlPlane&>(cluster_).find_behavior(bootstrap_operator_pod());
    auto* op = dynamic_cast<OperatorBehavior*>(behavior);
    if (!op || !op->detector()) return nlohmann::json::object();
    const DetectorStats& stats = op->detector()->stats();
    return {{"cycles", stats.cycles},
            {"events_emitted", stats.events_emitted},
            {"envelopes_ingested", stats.envelopes_ingested},
            {"analyzer_failures", stats.analyzer_failures},
            {"plugin_failures", stats.plugin_failures},
            {"analysis_mean_ms", stats.analysis_mean_ms()},
            {"analysis_max_ms", stats.analysis_max_ms()}};
  }

  std::uint64_t dynamic_pods_launched() const {
    std::uint64_t n = 0;
    for (const auto& pod : cluster_.cluster_view().pods)
      if (pod.owner != kBootstrapOwner) ++n;
    return n;
  }

  ScenarioConfig config_;
  std::filesystem::path out_dir_;
  SimKernel kernel_;
  MessageBus bus_;
  ControlPlane cluster_;
  std::shared_ptr<RuntimeMetrics> metrics_;
  std::unique_ptr<ApplicationManager> manager_;
  ClusterTopology topology_;
  std::map<std::string, NodeRole> node_roles_;
  std::string cloud_node_;
  std::vector<VirtualTime> pointcloud_cloud_deliveries_;
  bool finalized_ = false;
};

/// Convenience wrapper: build, run, report.
inline nlohmann::json run_scenario(const ScenarioConfig& config,
                                   const std::filesystem::path& out_dir) {
  ScenarioRuntime runtime{config, out_dir};
  runtime.run();
  return runtime.report();
}

}  // namespace fleetsim
