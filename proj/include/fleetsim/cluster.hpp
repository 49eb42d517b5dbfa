#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fleetsim/kernel.hpp"
#include "fleetsim/log.hpp"
#include "fleetsim/workload.hpp"

namespace fleetsim {

struct NodeStatus {
  std::string node_id;
  NodeRole role = NodeRole::cloud;
  ResourceRequest capacity;
  ResourceRequest allocated;
  bool ready = true;

  ResourceRequest residual() const { return capacity - allocated; }
};

enum class PodPhase { Pending, Starting, Running, Terminating, Terminated, Failed };

inline const char* to_string(PodPhase phase) {
  switch (phase) {
    case PodPhase::Pending: return "Pending";
    case PodPhase::Starting: return "Starting";
    case PodPhase::Running: return "Running";
    case PodPhase::Terminating: return "Terminating";
    case PodPhase::Terminated: return "Terminated";
    default: return "Failed";
  }
}

struct PodStatus {
  std::string pod_id;
  std::string owner;  // application instance id
  std::string node_id;
  PodPhase phase = PodPhase::Pending;
  VirtualTime phase_since;
  int restart_count = 0;
};

struct PodTransition {
  std::string pod_id;
  PodPhase from;
  PodPhase to;
};

struct ReconcileReport {
  VirtualTime tick_time;
  std::vector<PodTransition> transitions;
  std::vector<std::pair<std::string, std::string>> pending_unschedulable;  // pod id, reason
};

struct ClusterView {
  VirtualTime taken_at;
  std::vector<NodeStatus> nodes;
  std::vector<PodStatus> pods;
};

/// In-process stand-in for a pod's functional behavior. Activated exactly
/// when the pod enters Running, deactivated the moment it leaves it.
class PodBehavior {
 public:
  virtual ~PodBehavior() = default;
  virtual void activate() = 0;
  virtual void deactivate() = 0;
};

using BehaviorFactory = std::function<std::unique_ptr<PodBehavior>(
    const PodSpec&, const std::string& node_id, const std::string& pod_id)>;

struct ControlPlaneConfig {
  Duration reconcile_interval = millis(250);
  Duration default_startup_latency = secs(5);
  Duration termination_latency = millis(500);
};

/// Simulated cluster control plane: desired state per application instance,
/// actual pod state, periodic reconciliation with configurable startup
/// latency, and self-healing restart of failed pods.
///
/// Pod lifecycle: Pending -> Starting -> Running; Running -> Terminating |
/// Failed; Failed -> Starting (restart); any non-terminal phase ->
/// Terminating when removed from desired state; Terminating -> Terminated.
/// Node capacity is reserved at Pending -> Starting and released at
/// Terminated.
class ControlPlane {
 public:
  using Observer = std::function<void(const ReconcileReport&)>;

  ControlPlane(SimKernel& kernel, ControlPlaneConfig config = {})
      : kernel_{kernel}, config_{config} {}

  void add_node(const std::string& node_id, NodeRole role, ResourceRequest capacity) {
    if (nodes_.count(node_id)) throw SimError("duplicate node '" + node_id + "'");
    nodes_[node_id] = NodeStatus{node_id, role, capacity, {}, true};
  }

  void register_behavior(BehaviorKind kind, BehaviorFactory factory) {
    behavior_factories_[kind] = std::move(factory);
  }

  void add_observer(Observer observer) { observers_.push_back(std::move(observer)); }

  /// Starts the periodic reconciliation loop.
  void start() {
    if (started_) return;
    started_ = true;
    schedule_tick();
  }

  /// Replaces the desired state for `workload.owner`. New pods become
  /// Pending; pods no longer desired are marked for termination at the next
  /// tick; pods whose spec only changed config are updated in place.
  /// Returns the accepted revision.
  int apply(const WorkloadDefinition& workload) {
    validate_workload(workload);
    auto& desired = desired_[workload.owner];
    desired.revision = workload.revision != 0 ? workload.revision : desired.revision + 1;
    std::map<std::string, PodSpec> next;
    for (const auto& pod : workload.pods) next[pod.pod_name] = pod;

    for (const auto& [name, spec] : next) {
      std::string pod_id = pod_id_for(workload.owner, name);
      auto it = pods_.find(pod_id);
      if (it != pods_.end() && is_terminal(it->second.status.phase)) {
        pods_.erase(it);  // re-added after termination: fresh pod
        it = pods_.end();
      }
      if (it == pods_.end()) {
        PodRecord record;
        record.status = PodStatus{pod_id, workload.owner, spec.target_node.value_or(""),
                                  PodPhase::Pending, kernel_.now(), 0};
        record.spec = spec;
        record_phase(pod_id, PodPhase::Pending, kernel_.now());
        pods_.emplace(pod_id, std::move(record));
        ++pods_created_;
      } else {
        // in-place reconfiguration: no phase change
        it->second.spec.config = spec.config;
      }
    }
    desired.pods = std::move(next);
    return desired.revision;
  }

  /// Installs pre-provisioned pods that are already operational at t=0 (the
  /// initial cluster configuration). Only valid before the clock has moved.
  void bootstrap(const WorkloadDefinition& workload) {
    if (kernel_.now() != VirtualTime{}) throw SimError("bootstrap only valid at t=0");
    validate_workload(workload);
    auto& desired = desired_[workload.owner];
    desired.revision = std::max(desired.revision, workload.revision != 0 ? workload.revision : 1);
    for (const auto& spec : workload.pods) {
      std::string pod_id = pod_id_for(workload.owner, spec.pod_name);
      if (pods_.count(pod_id)) throw SimError("bootstrap: pod '" + pod_id + "' already exists");
      std::string node = spec.target_node ? *spec.target_node
                                          : pick_node(spec, kernel_.now()).value_or("");
      if (node.empty() || !nodes_.count(node))
        throw SimError("bootstrap: no feasible node for pod '" + pod_id + "'");
      reserve(nodes_.at(node), spec.resource_request, pod_id);
      PodRecord record;
      record.status = PodStatus{pod_id, workload.owner, node, PodPhase::Running, kernel_.now(), 0};
      record.spec = spec;
      record.reserved = true;
      auto [it, _] = pods_.emplace(pod_id, std::move(record));
      desired.pods[spec.pod_name] = spec;
      activate_behavior(it->second);
      record_phase(pod_id, PodPhase::Running, kernel_.now());
    }
  }

  /// Marks a Running pod as failed: its behavior stops immediately and the
  /// next tick begins the restart.
  void inject_failure(const std::string& pod_id) {
    auto it = pods_.find(pod_id);
    if (it == pods_.end()) throw SimError("inject_failure: unknown pod '" + pod_id + "'");
    if (it->second.status.phase != PodPhase::Running)
      throw SimError("inject_failure: pod '" + pod_id + "' is not Running");
    deactivate_behavior(it->second);
    set_phase(it->second, PodPhase::Failed);
    ++failures_injected_;
  }

  /// Immutable snapshot of node and pod state at the current virtual time.
  ClusterView cluster_view() const {
    ClusterView view;
    view.taken_at = kernel_.now();
    for (const auto& [_, node] : nodes_) view.nodes.push_back(node);
    for (const auto& [_, record] : pods_) view.pods.push_back(record.status);
    return view;
  }

  /// One reconciliation pass. Ordering inside a tick: desired-state removals
  /// first (so shutdown wins over restart), then terminations complete, then
  /// failed pods restart, then starting pods come up, then pending pods are
  /// scheduled.
  ReconcileReport reconcile_tick() {
    ReconcileReport report;
    report.tick_time = kernel_.now();
    VirtualTime now = kernel_.now();

    // removals: pods present but no longer desired
    for (auto& [pod_id, record] : pods_) {
      if (is_terminal(record.status.phase) || record.status.phase == PodPhase::Terminating)
        continue;
      if (!is_desired(record)) {
        deactivate_behavior(record);
        transition(record, PodPhase::Terminating, report);
        record.terminate_at = now + config_.termination_latency;
      }
    }

    for (auto& [pod_id, record] : pods_) {
      switch (record.status.phase) {
        case PodPhase::Terminating:
          if (record.terminate_at && now >= *record.terminate_at) {
            release(record);
            transition(record, PodPhase::Terminated, report);
          }
          break;
        case PodPhase::Failed:
          if (is_desired(record)) {
            ++record.status.restart_count;
            record.ready_at = now + startup_latency_for(record.spec);
            transition(record, PodPhase::Starting, report);
          }
          break;
        case PodPhase::Starting:
          if (record.ready_at && now >= *record.ready_at) {
            transition(record, PodPhase::Running, report);
            activate_behavior(record);
          }
          break;
        case PodPhase::Pending: {
          std::string node = record.status.node_id;
          if (node.empty()) {
            auto picked = pick_node(record.spec, now);
            if (!picked) {
              report.pending_unschedulable.emplace_back(pod_id, "insufficient-capacity");
              break;
            }
            node = *picked;
          } else {
            auto it = nodes_.find(node);
            if (it == nodes_.end()) {
              report.pending_unschedulable.emplace_back(pod_id, "unknown-node");
              break;
            }
            if (!record.spec.resource_request.fits_within(it->second.residual())) {
              report.pending_unschedulable.emplace_back(pod_id, "insufficient-capacity");
              break;
            }
          }
          record.status.node_id = node;
          reserve(nodes_.at(node), record.spec.resource_request, pod_id);
          record.reserved = true;
          record.ready_at = now + startup_latency_for(record.spec);
          transition(record, PodPhase::Starting, report);
          break;
        }
        default:
          break;
      }
    }

    check_capacity_safety();
    for (const auto& observer : observers_) observer(report);
    return report;
  }

  const NodeStatus& node(const std::string& node_id) const {
    auto it = nodes_.find(node_id);
    if (it == nodes_.end()) throw SimError("unknown node '" + node_id + "'");
    return it->second;
  }

  const PodStatus* find_pod(const std::string& pod_id) const {
    auto it = pods_.find(pod_id);
    return it == pods_.end() ? nullptr : &it->second.status;
  }

  const PodSpec* find_pod_spec(const std::string& pod_id) const {
    auto it = pods_.find(pod_id);
    return it == pods_.end() ? nullptr : &it->second.spec;
  }

  PodBehavior* find_behavior(const std::string& pod_id) {
    auto it = pods_.find(pod_id);
    return it == pods_.end() ? nullptr : it->second.behavior.get();
  }

  /// All (phase, time) changes a pod has gone through, oldest first.
  const std::vector<std::pair<PodPhase, VirtualTime>>& phase_history(
      const std::string& pod_id) const {
    static const std::vector<std::pair<PodPhase, VirtualTime>> empty;
    auto it = phase_history_.find(pod_id);
    return it == phase_history_.end() ? empty : it->second;
  }

  static std::string pod_id_for(const std::string& owner, const std::string& pod_name) {
    return owner + "." + pod_name;
  }

  const ControlPlaneConfig& config() const { return config_; }
  std::uint64_t pods_created() const { return pods_created_; }
  std::uint64_t failures_injected() const { return failures_injected_; }

  /// Best-fit node choice: among ready nodes satisfying the role constraint
  /// with enough residual capacity, pick the smallest residual; ties go to
  /// the lexicographically smallest node id. Shared by the control plane
  /// scheduler and the application manager's placement.
  static std::optional<std::string> best_fit_node(const std::vector<NodeStatus>& nodes,
                                                  const ResourceRequest& request,
                                                  std::optional<NodeRole> role) {
    const NodeStatus* best = nullptr;
    for (const auto& node : nodes) {
      if (!node.ready) continue;
      if (role && node.role != *role) continue;
      if (!request.fits_within(node.residual())) continue;
      if (!best) {
        best = &node;
        continue;
      }
      auto r = node.residual();
      auto rb = best->residual();
      if (r.cpu_milli != rb.cpu_milli ? r.cpu_milli < rb.cpu_milli
                                      : (r.mem_mib != rb.mem_mib ? r.mem_mib < rb.mem_mib
                                                                 : node.node_id < best->node_id))
        best = &node;
    }
    return best ? std::optional<std::string>{best->node_id} : std::nullopt;
  }

 private:
  struct DesiredState {
    int revision = 0;
    std::map<std::string, PodSpec> pods;  // by pod_name
  };

  struct PodRecord {
    PodStatus status;
    PodSpec spec;
    std::unique_ptr<PodBehavior> behavior;
    std::optional<VirtualTime> ready_at;
    std::optional<VirtualTime> terminate_at;
    bool reserved = false;
  };

  void schedule_tick() {
    kernel_.schedule_after(config_.reconcile_interval, [this] {
      reconcile_tick();
      schedule_tick();
    });
  }

  void validate_workload(const WorkloadDefinition& workload) const {
    if (workload.owner.empty()) throw SimError("workload owner missing");
    std::set<std::string> names;
    for (const auto& pod : workload.pods) {
      if (pod.pod_name.empty()) throw SimError("pod with empty name");
      if (!names.insert(pod.pod_name).second)
        throw SimError("duplicate pod name '" + pod.pod_name + "' in workload");
      if (pod.resource_request.cpu_milli <= 0 || pod.resource_request.mem_mib <= 0)
        throw SimError("pod '" + pod.pod_name + "' has non-positive resource request");
      if (pod.target_node) {
        auto it = nodes_.find(*pod.target_node);
        if (it == nodes_.end())
          throw SimError("pod '" + pod.pod_name + "' targets unknown node '" + *pod.target_node +
                         "'");
        // admission check: an explicit target must at least fit the node's
        // total capacity; transient contention is handled by the scheduler
        if (!pod.resource_request.fits_within(it->second.capacity))
          throw SimError("pod '" + pod.pod_name + "' exceeds capacity of node '" +
                         *pod.target_node + "'");
      } else if (!pod.node_role) {
        throw SimError("pod '" + pod.pod_name + "' has neither target node nor role constraint");
      }
    }
  }

  std::optional<std::string> pick_node(const PodSpec& spec, VirtualTime) const {
    std::vector<NodeStatus> nodes;
    nodes.reserve(nodes_.size());
    for (const auto& [_, node] : nodes_) nodes.push_back(node);
    return best_fit_node(nodes, spec.resource_request, spec.node_role);
  }

  bool is_desired(const PodRecord& record) const {
    auto it = desired_.find(record.status.owner);
    if (it == desired_.end()) return false;
    std::string name = pod_name_of(record.status.pod_id, record.status.owner);
    return it->second.pods.count(name) > 0;
  }

  static std::string pod_name_of(const std::string& pod_id, const std::string& owner) {
    return pod_id.substr(owner.size() + 1);
  }

  static bool is_terminal(PodPhase phase) { return phase == PodPhase::Terminated; }

  Duration startup_latency_for(const PodSpec& spec) const {
    return spec.startup_latency.value_or(config_.default_startup_latency);
  }

  void reserve(NodeStatus& node, const ResourceRequest& request, const std::string& pod_id) {
    if (!request.fits_within(node.residual()))
      throw SimError("capacity overcommit on node '" + node.node_id + "' for pod '" + pod_id + "'");
    node.allocated = node.allocated + request;
  }

  void release(PodRecord& record) {
    if (!record.reserved) return;
    auto it = nodes_.find(record.status.node_id);
    if (it != nodes_.end()) it->second.allocated = it->second.allocated - record.spec.resource_request;
    record.reserved = false;
  }

  void transition(PodRecord& record, PodPhase to, ReconcileReport& report) {
    report.transitions.push_back(PodTransition{record.status.pod_id, record.status.phase, to});
    set_phase(record, to);
  }

  void set_phase(PodRecord& record, PodPhase to) {
    record.status.phase = to;
    record.status.phase_since = kernel_.now();
    record_phase(record.status.pod_id, to, kernel_.now());
  }

  void record_phase(const std::string& pod_id, PodPhase phase, VirtualTime at) {
    phase_history_[pod_id].emplace_back(phase, at);
  }

  void activate_behavior(PodRecord& record) {
    auto it = behavior_factories_.find(record.spec.behavior_kind);
    if (it == behavior_factories_.end()) return;
    record.behavior = it->second(record.spec, record.status.node_id, record.status.pod_id);
    if (record.behavior) record.behavior->activate();
  }

  void deactivate_behavior(PodRecord& record) {
    if (!record.behavior) return;
    record.behavior->deactivate();
    record.behavior.reset();
  }

  void check_capacity_safety() const {
    std::map<std::string, ResourceRequest> used;
    for (const auto& [_, record] : pods_) {
      if (record.reserved)
        used[record.status.node_id] = used[record.status.node_id] + record.spec.resource_request;
    }
    for (const auto& [node_id, node] : nodes_) {
      ResourceRequest sum = used.count(node_id) ? used.at(node_id) : ResourceRequest{};
      if (!sum.fits_within(node.capacity))
        throw SimError("capacity safety violated on node '" + node_id + "'");
      if (sum != node.allocated)
        throw SimError("allocation bookkeeping drift on node '" + node_id + "'");
    }
  }

  SimKernel& kernel_;
  ControlPlaneConfig config_;
  bool started_ = false;
  std::map<std::string, NodeStatus> nodes_;
  std::map<std::string, DesiredState> desired_;  // by instance id
  std::map<std::string, PodRecord> pods_;        // by pod id
  std::map<BehaviorKind, BehaviorFactory> behavior_factories_;
  std::map<std::string, std::vector<std::pair<PodPhase, VirtualTime>>> phase_history_;
  std::vector<Observer> observers_;
  std::uint64_t pods_created_ = 0;
  std::uint64_t failures_injected_ = 0;
};

}  // namespace fleetsim
