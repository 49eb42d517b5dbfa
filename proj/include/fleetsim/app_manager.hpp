#pragma once

#include <chrono>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fleetsim/bus.hpp"
#include "fleetsim/cluster.hpp"
#include "fleetsim/kernel.hpp"
#include "fleetsim/log.hpp"
#include "fleetsim/task.hpp"
#include "fleetsim/workload.hpp"

namespace fleetsim {

class CompositionError : public SimError {
 public:
  using SimError::SimError;
};

class PlacementError : public SimError {
 public:
  using SimError::SimError;
};

enum class DecisionKind { accepted, postponed, rejected };

inline const char* to_string(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::accepted: return "accepted";
    case DecisionKind::postponed: return "postponed";
    default: return "rejected";
  }
}

/// Outcome of one task description. Accepted decisions carry the workload
/// that was applied; postponed ones carry the retry time.
struct Decision {
  DecisionKind kind = DecisionKind::rejected;
  std::string reason;
  std::optional<WorkloadDefinition> workload;
  std::optional<VirtualTime> retry_at;

  std::string request_id;
  std::string correlation_key;
  std::string intent;
  std::string instance_id;  // set when an instance was created or addressed
  VirtualTime decided_at;
  std::chrono::nanoseconds translation_wall{0};  // measured host time
};

enum class ConflictStrategy { cancel, postpone, offload };

inline const char* to_string(ConflictStrategy s) {
  switch (s) {
    case ConflictStrategy::cancel: return "cancel";
    case ConflictStrategy::postpone: return "postpone";
    default: return "offload";
  }
}

inline ConflictStrategy conflict_strategy_from_string(const std::string& s) {
  if (s == "cancel") return ConflictStrategy::cancel;
  if (s == "postpone") return ConflictStrategy::postpone;
  if (s == "offload") return ConflictStrategy::offload;
  throw SimError("unknown conflict strategy '" + s + "'");
}

enum class InstanceState { pending, deploying, running, terminating, terminated, postponed };

inline const char* to_string(InstanceState s) {
  switch (s) {
    case InstanceState::pending: return "pending";
    case InstanceState::deploying: return "deploying";
    case InstanceState::running: return "running";
    case InstanceState::terminating: return "terminating";
    case InstanceState::terminated: return "terminated";
    default: return "postponed";
  }
}

/// A launched (or launching) application and the bookkeeping needed to manage
/// it: which pods belong to it, who asked for it, and its lifecycle state.
struct ApplicationInstance {
  std::string instance_id;
  std::string correlation_key;
  int workload_revision = 0;
  InstanceState state = InstanceState::pending;
  std::vector<std::string> owned_pods;
  std::string requested_by;  // pod id of the requesting operator, if any
  VirtualTime requested_at;
  VirtualTime applied_at;
  std::optional<VirtualTime> all_running_at;
  std::optional<VirtualTime> terminated_at;
  std::set<std::string> request_ids;  // replay-detection window
};

/// One resolved microservice of a composed application.
struct ResolvedService {
  const MicroserviceTemplate* tmpl = nullptr;
  std::map<std::string, std::string> config;
  std::vector<Topic> subscribes;
  std::vector<Topic> publishes;
};

struct AppManagerConfig {
  ConflictStrategy strategy = ConflictStrategy::postpone;
  Duration retry_interval = secs(1);
  NodeRole default_role = NodeRole::cloud;
  bool restart_on_reconfigure = false;
};

/// Translates task descriptions into concrete workloads, decides whether to
/// act on them at all, and manages the lifecycle of every application it has
/// launched. Tasks are processed strictly in arrival order; composition and
/// placement are pure functions of (task, registry, cluster view).
class ApplicationManager {
 public:
  ApplicationManager(SimKernel& kernel, MessageBus& bus, ControlPlane& cluster,
                     ServiceRegistry registry, std::string node, AppManagerConfig config = {})
      : kernel_{kernel},
        bus_{bus},
        cluster_{cluster},
        registry_{std::move(registry)},
        node_{std::move(node)},
        config_{config} {}

  /// Subscribes to the task topic and starts tracking pod state.
  void attach() {
    if (attached_) return;
    attached_ = true;
    task_subscription_ = bus_.subscribe(
        node_, "/operator/tasks",
        [this](const EnvelopePtr& env) {
          TaskDescription td;
          try {
            td = task_from_payload(env->payload);
          } catch (const std::exception& e) {
            log::warn("app_manager", std::string("undecodable task description: ") + e.what());
            return;
          }
          handle_task(td);
        },
        Reach::cluster);
    cluster_.add_observer([this](const ReconcileReport& report) { on_reconcile(report); });
  }

  Decision handle_task(const TaskDescription& td) {
    auto wall_start = std::chrono::steady_clock::now();
    Decision decision = decide(td, /*is_retry=*/false);
    decision.translation_wall = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - wall_start);
    finish_decision(td, decision);
    return decision;
  }

  /// Composes an application: for each required capability and multiplicity,
  /// selects exactly one verified template (lexicographically smallest name)
  /// and substitutes parameters into config and topic templates.
  std::vector<ResolvedService> compose(const std::vector<CapabilityRequirement>& capabilities,
                                       const ServiceRegistry& registry) const {
    if (registry.empty()) throw CompositionError("registry is empty");
    std::vector<ResolvedService> services;
    for (const auto& cap : capabilities) {
      auto candidates = registry.find_capability(cap.tag);
      if (candidates.empty()) {
        if (registry.any_entry_has(cap.tag))
          throw CompositionError("capability '" + cap.tag + "' only matched unverified entries");
        throw CompositionError("no template provides capability '" + cap.tag + "'");
      }
      const MicroserviceTemplate* tmpl = candidates.front();
      if (cap.count < 1) throw CompositionError("capability '" + cap.tag + "' has count < 1");
      if (!cap.params.empty() && cap.params.size() != 1 &&
          cap.params.size() != static_cast<std::size_t>(cap.count))
        throw CompositionError("capability '" + cap.tag + "': params count mismatch");
      for (int k = 0; k < cap.count; ++k) {
        const std::map<std::string, std::string>* params = nullptr;
        if (cap.params.size() == 1) params = &cap.params[0];
        else if (!cap.params.empty()) params = &cap.params[static_cast<std::size_t>(k)];
        services.push_back(resolve_service(*tmpl, params));
      }
    }
    return services;
  }

  /// Assigns every pod a node satisfying its constraint and the residual
  /// capacity, deterministically (best fit, ties by node id). Throws
  /// PlacementError when some pod has no feasible node.
  WorkloadDefinition place(const std::vector<ResolvedService>& services, const ClusterView& view,
                           const TaskDescription& td) const {
    return place_impl(services, view, td, /*relax_roles=*/false);
  }

  /// Conflict resolution once placement has failed.
  Decision resolve_conflict(const std::vector<ResolvedService>& services, const ClusterView& view,
                            const TaskDescription& td, ConflictStrategy strategy) {
    Decision decision;
    switch (strategy) {
      case ConflictStrategy::cancel:
        decision.kind = DecisionKind::rejected;
        decision.reason = "no-capacity";
        return decision;
      case ConflictStrategy::postpone:
        decision.kind = DecisionKind::postponed;
        decision.reason = "no-capacity";
        decision.retry_at = kernel_.now() + config_.retry_interval;
        return decision;
      case ConflictStrategy::offload:
        try {
          WorkloadDefinition workload = place_impl(services, view, td, /*relax_roles=*/true);
          decision.kind = DecisionKind::accepted;
          decision.reason = "offloaded";
          decision.workload = std::move(workload);
          return decision;
        } catch (const PlacementError&) {
          decision.kind = DecisionKind::postponed;
          decision.reason = "no-capacity";
          decision.retry_at = kernel_.now() + config_.retry_interval;
          return decision;
        }
    }
    throw SimError("unreachable");
  }

  /// Terminates the live instance for a correlation key by applying an empty
  /// workload. Pod shutdown then proceeds through the reconciliation loop.
  Decision shutdown(const std::string& correlation_key) {
    Decision decision;
    auto it = live_.find(correlation_key);
    if (it == live_.end()) {
      cancel_pending_retry(correlation_key);
      decision.kind = DecisionKind::rejected;
      decision.reason = "not-found";
      return decision;
    }
    ApplicationInstance& instance = instances_.at(it->second);
    instance.state = InstanceState::terminating;
    WorkloadDefinition teardown;
    teardown.owner = instance.instance_id;
    teardown.revision = ++instance.workload_revision;
    cluster_.apply(teardown);
    decision.kind = DecisionKind::accepted;
    decision.reason = "terminating";
    decision.instance_id = instance.instance_id;
    decision.workload = teardown;
    return decision;
  }

  const std::map<std::string, ApplicationInstance>& instances() const { return instances_; }
  const std::vector<Decision>& decisions() const { return decisions_; }
  const ServiceRegistry& registry() const { return registry_; }
  const AppManagerConfig& config() const { return config_; }

  const ApplicationInstance* find_live(const std::string& correlation_key) const {
    auto it = live_.find(correlation_key);
    return it == live_.end() ? nullptr : &instances_.at(it->second);
  }

 private:
  struct PendingRetry {
    TaskDescription td;
    EventHandle event;
  };

  Decision decide(const TaskDescription& td, bool is_retry) {
    Decision decision;
    decision.request_id = td.request_id;
    decision.correlation_key = td.correlation_key;
    decision.intent = to_string(td.intent);
    decision.decided_at = kernel_.now();

    if (td.request_id.empty() || td.correlation_key.empty()) {
      decision.kind = DecisionKind::rejected;
      decision.reason = "invalid";
      return decision;
    }
    if (!is_retry && seen_request_ids_.count(td.request_id)) {
      decision.kind = DecisionKind::rejected;
      decision.reason = "duplicate";
      return decision;
    }
    seen_request_ids_.insert(td.request_id);

    switch (td.intent) {
      case TaskIntent::deploy: return decide_deploy(td, decision);
      case TaskIntent::reconfigure: return decide_reconfigure(td, decision);
      case TaskIntent::shutdown: {
        Decision d = shutdown(td.correlation_key);
        d.request_id = decision.request_id;
        d.correlation_key = decision.correlation_key;
        d.intent = decision.intent;
        d.decided_at = decision.decided_at;
        return d;
      }
    }
    decision.kind = DecisionKind::rejected;
    decision.reason = "invalid";
    return decision;
  }

  Decision decide_deploy(const TaskDescription& td, Decision decision) {
    if (td.required_capabilities.empty()) {
      decision.kind = DecisionKind::rejected;
      decision.reason = "invalid";
      return decision;
    }
    if (live_.count(td.correlation_key)) {
      decision.kind = DecisionKind::rejected;
      decision.reason = "duplicate";
      return decision;
    }
    std::vector<ResolvedService> services;
    try {
      services = compose(td.required_capabilities, registry_);
    } catch (const CompositionError& e) {
      decision.kind = DecisionKind::rejected;
      decision.reason = "unsatisfiable";
      log::info("app_manager", "rejecting '" + td.request_id + "': " + e.what());
      return decision;
    }
    ClusterView view = cluster_.cluster_view();
    WorkloadDefinition workload;
    try {
      workload = place(services, view, td);
      decision.kind = DecisionKind::accepted;
      decision.reason = "scheduled";
      decision.workload = std::move(workload);
    } catch (const PlacementError& e) {
      log::info("app_manager", "placement failed for '" + td.request_id + "': " + e.what());
      decision = merge(resolve_conflict(services, view, td, config_.strategy), decision);
    }

    if (decision.kind == DecisionKind::accepted) {
      ApplicationInstance& instance = create_instance(td);
      decision.instance_id = instance.instance_id;
      decision.workload->owner = instance.instance_id;
      decision.workload->revision = ++instance.workload_revision;
      for (auto& pod : decision.workload->pods) {
        pod.config["workload_revision"] = std::to_string(decision.workload->revision);
        instance.owned_pods.push_back(ControlPlane::pod_id_for(instance.instance_id, pod.pod_name));
      }
      instance.state = InstanceState::deploying;
      instance.applied_at = kernel_.now();
      cluster_.apply(*decision.workload);
    } else if (decision.kind == DecisionKind::postponed) {
      schedule_retry(td, *decision.retry_at);
    }
    return decision;
  }

  Decision decide_reconfigure(const TaskDescription& td, Decision decision) {
    auto it = live_.find(td.correlation_key);
    if (it == live_.end()) {
      decision.kind = DecisionKind::rejected;
      decision.reason = "not-found";
      return decision;
    }
    ApplicationInstance& instance = instances_.at(it->second);
    std::vector<ResolvedService> services;
    try {
      services = compose(td.required_capabilities, registry_);
    } catch (const CompositionError&) {
      decision.kind = DecisionKind::rejected;
      decision.reason = "unsatisfiable";
      return decision;
    }
    // re-placement is capacity-neutral: credit the instance's own reserved
    // resources back before checking fit
    ClusterView view = cluster_.cluster_view();
    for (const auto& pod_id : instance.owned_pods) {
      const PodStatus* pod = cluster_.find_pod(pod_id);
      const PodSpec* spec = cluster_.find_pod_spec(pod_id);
      if (!pod || !spec) continue;
      if (pod->phase == PodPhase::Pending || pod->phase == PodPhase::Terminated) continue;
      for (auto& node : view.nodes) {
        if (node.node_id == pod->node_id) node.allocated = node.allocated - spec->resource_request;
      }
    }
    WorkloadDefinition workload;
    try {
      workload = place(services, view, td);
    } catch (const PlacementError&) {
      decision.kind = DecisionKind::rejected;
      decision.reason = "no-capacity";
      return decision;
    }
    workload.owner = instance.instance_id;
    if (config_.restart_on_reconfigure) {
      // restart semantics: drain the instance, relaunch once its pods are gone
      WorkloadDefinition drain;
      drain.owner = instance.instance_id;
      drain.revision = ++instance.workload_revision;
      cluster_.apply(drain);
      instance.state = InstanceState::deploying;
      pending_relaunch_[instance.instance_id] = workload;
      decision.reason = "reconfigured-restart";
    } else {
      // in-place config replacement, no phase change
      workload.revision = ++instance.workload_revision;
      for (auto& pod : workload.pods)
        pod.config["workload_revision"] = std::to_string(workload.revision);
      cluster_.apply(workload);
      decision.reason = "reconfigured";
    }
    decision.kind = DecisionKind::accepted;
    decision.instance_id = instance.instance_id;
    decision.workload = std::move(workload);
    return decision;
  }

  static Decision merge(Decision from_conflict, const Decision& base) {
    from_conflict.request_id = base.request_id;
    from_conflict.correlation_key = base.correlation_key;
    from_conflict.intent = base.intent;
    from_conflict.decided_at = base.decided_at;
    return from_conflict;
  }

  ApplicationInstance& create_instance(const TaskDescription& td) {
    std::string id = "app-" + std::to_string(next_instance_++);
    ApplicationInstance instance;
    instance.instance_id = id;
    instance.correlation_key = td.correlation_key;
    instance.requested_by = td.requested_by;
    instance.requested_at = td.issued_at;
    instance.request_ids.insert(td.request_id);
    auto [it, _] = instances_.emplace(id, std::move(instance));
    live_[td.correlation_key] = id;
    return it->second;
  }

  void finish_decision(const TaskDescription&, Decision& decision) {
    decisions_.push_back(decision);
    publish_decision(decision);
  }

  void publish_decision(const Decision& decision) {
    if (!attached_) return;
    nlohmann::json j{{"request_id", decision.request_id},
                     {"correlation_key", decision.correlation_key},
                     {"intent", decision.intent},
                     {"kind", to_string(decision.kind)},
                     {"reason", decision.reason},
                     {"decided_at", decision.decided_at.ns()}};
    if (!decision.instance_id.empty()) j["instance_id"] = decision.instance_id;
    if (decision.retry_at) j["retry_at"] = decision.retry_at->ns();
    std::string s = j.dump();
    MessageEnvelope env;
    env.topic = "/operator/decisions";
    env.publish_time = kernel_.now();
    env.source_node = node_;
    env.schema_tag = "decision";
    env.payload.assign(s.begin(), s.end());
    bus_.publish(std::move(env));
  }

  void schedule_retry(const TaskDescription& td, VirtualTime retry_at) {
    cancel_pending_retry(td.correlation_key);
    PendingRetry retry;
    retry.td = td;
    retry.event = kernel_.schedule(retry_at, [this, key = td.correlation_key] {
      auto it = pending_retries_.find(key);
      if (it == pending_retries_.end()) return;
      TaskDescription td = it->second.td;
      pending_retries_.erase(it);
      auto wall_start = std::chrono::steady_clock::now();
      Decision decision = decide(td, /*is_retry=*/true);
      decision.translation_wall = std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now() - wall_start);
      finish_decision(td, decision);
    });
    pending_retries_[td.correlation_key] = std::move(retry);
  }

  void cancel_pending_retry(const std::string& correlation_key) {
    auto it = pending_retries_.find(correlation_key);
    if (it == pending_retries_.end()) return;
    kernel_.cancel(it->second.event);
    pending_retries_.erase(it);
    log::info("app_manager", "cancelled pending retry for '" + correlation_key + "'");
  }

  void on_reconcile(const ReconcileReport&) {
    // restart-style reconfigurations: relaunch once the drained pods are gone
    for (auto it = pending_relaunch_.begin(); it != pending_relaunch_.end();) {
      ApplicationInstance& instance = instances_.at(it->first);
      if (instance.state == InstanceState::terminating ||
          instance.state == InstanceState::terminated) {
        it = pending_relaunch_.erase(it);  // shutdown wins over relaunch
        continue;
      }
      bool drained = true;
      for (const auto& pod_id : instance.owned_pods) {
        const PodStatus* pod = cluster_.find_pod(pod_id);
        if (pod && pod->phase != PodPhase::Terminated) drained = false;
      }
      if (!drained) {
        ++it;
        continue;
      }
      WorkloadDefinition workload = it->second;
      workload.revision = ++instance.workload_revision;
      for (auto& pod : workload.pods)
        pod.config["workload_revision"] = std::to_string(workload.revision);
      instance.owned_pods.clear();
      for (const auto& pod : workload.pods)
        instance.owned_pods.push_back(ControlPlane::pod_id_for(instance.instance_id, pod.pod_name));
      instance.applied_at = kernel_.now();
      instance.all_running_at.reset();
      cluster_.apply(workload);
      it = pending_relaunch_.erase(it);
    }

    // roll instance states forward from pod phases
    for (auto& [id, instance] : instances_) {
      if (instance.state == InstanceState::deploying) {
        bool all_running = !instance.owned_pods.empty();
        for (const auto& pod_id : instance.owned_pods) {
          const PodStatus* pod = cluster_.find_pod(pod_id);
          if (!pod || pod->phase != PodPhase::Running) {
            all_running = false;
            break;
          }
        }
        if (all_running) {
          instance.state = InstanceState::running;
          instance.all_running_at = kernel_.now();
        }
      } else if (instance.state == InstanceState::terminating) {
        bool all_gone = true;
        for (const auto& pod_id : instance.owned_pods) {
          const PodStatus* pod = cluster_.find_pod(pod_id);
          if (pod && pod->phase != PodPhase::Terminated) {
            all_gone = false;
            break;
          }
        }
        if (all_gone) {
          instance.state = InstanceState::terminated;
          instance.terminated_at = kernel_.now();
          live_.erase(instance.correlation_key);
          for (const auto& rid : instance.request_ids) seen_request_ids_.erase(rid);
          terminate_children_of(instance);
        }
      }
    }
  }

  /// Operator application chains: when an operator instance goes away, the
  /// instances it requested are torn down with it.
  void terminate_children_of(const ApplicationInstance& parent) {
    std::set<std::string> parent_pods(parent.owned_pods.begin(), parent.owned_pods.end());
    for (auto& [id, instance] : instances_) {
      if (instance.state == InstanceState::terminated ||
          instance.state == InstanceState::terminating)
        continue;
      if (!instance.requested_by.empty() && parent_pods.count(instance.requested_by)) {
        log::info("app_manager", "terminating '" + id + "' owned by terminated operator '" +
                                     parent.instance_id + "'");
        shutdown(instance.correlation_key);
      }
    }
  }

  ResolvedService resolve_service(const MicroserviceTemplate& tmpl,
                                  const std::map<std::string, std::string>* params) const {
    ResolvedService out;
    out.tmpl = &tmpl;
    out.config = tmpl.config_defaults;
    if (params)
      for (const auto& [k, v] : *params) out.config[k] = v;
    for (const auto& [key, type] : tmpl.config_params) {
      (void)type;
      if (!out.config.count(key))
        throw CompositionError("template '" + tmpl.name + "': missing parameter '" + key + "'");
    }
    for (const auto& t : tmpl.subscribes) out.subscribes.push_back(substitute(t, out.config, tmpl.name));
    for (const auto& t : tmpl.publishes) out.publishes.push_back(substitute(t, out.config, tmpl.name));
    return out;
  }

  static std::string substitute(const std::string& tmpl,
                                const std::map<std::string, std::string>& values,
                                const std::string& context) {
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size();) {
      if (tmpl[i] == '{') {
        auto end = tmpl.find('}', i);
        if (end == std::string::npos)
          throw CompositionError("template '" + context + "': unbalanced '{' in '" + tmpl + "'");
        std::string key = tmpl.substr(i + 1, end - i - 1);
        auto it = values.find(key);
        if (it == values.end())
          throw CompositionError("template '" + context + "': unresolved placeholder '{" + key +
                                 "}'");
        out += it->second;
        i = end + 1;
      } else {
        out.push_back(tmpl[i++]);
      }
    }
    return out;
  }

  WorkloadDefinition place_impl(const std::vector<ResolvedService>& services,
                                const ClusterView& view, const TaskDescription& td,
                                bool relax_roles) const {
    std::vector<NodeStatus> nodes = view.nodes;  // tentative allocations accumulate here
    WorkloadDefinition workload;
    std::map<std::string, int> name_counters;
    NodeRole hint_role =
        td.placement_hint ? node_role_from_string(*td.placement_hint) : config_.default_role;

    for (const auto& service : services) {
      PodSpec pod;
      int k = name_counters[service.tmpl->name]++;
      pod.pod_name = service.tmpl->name + "-" + std::to_string(k);
      pod.image_ref = service.tmpl->image_ref;
      pod.resource_request = service.tmpl->resource_request;
      pod.config = service.config;
      pod.subscribes = service.subscribes;
      pod.publishes = service.publishes;
      pod.behavior_kind = service.tmpl->behavior_kind;
      pod.startup_latency = service.tmpl->startup_latency;

      std::optional<std::string> pinned = pinned_node(service);
      if (pinned) {
        auto node_it = std::find_if(nodes.begin(), nodes.end(),
                                    [&](const NodeStatus& n) { return n.node_id == *pinned; });
        if (node_it == nodes.end())
          throw PlacementError("pod '" + pod.pod_name + "': pinned node '" + *pinned +
                               "' does not exist");
        if (!pod.resource_request.fits_within(node_it->residual()))
          throw PlacementError("pod '" + pod.pod_name + "': pinned node '" + *pinned + "' full");
        node_it->allocated = node_it->allocated + pod.resource_request;
        pod.target_node = *pinned;
      } else {
        auto chosen = ControlPlane::best_fit_node(nodes, pod.resource_request, hint_role);
        if (!chosen && relax_roles)
          chosen = ControlPlane::best_fit_node(nodes, pod.resource_request, std::nullopt);
        if (!chosen)
          throw PlacementError("pod '" + pod.pod_name + "': no feasible " +
                               std::string(to_string(hint_role)) + " node");
        auto node_it = std::find_if(nodes.begin(), nodes.end(),
                                    [&](const NodeStatus& n) { return n.node_id == *chosen; });
        node_it->allocated = node_it->allocated + pod.resource_request;
        pod.target_node = *chosen;
        pod.node_role = hint_role;
      }
      workload.pods.push_back(std::move(pod));
    }
    return workload;
  }

  /// Bridges are colocated with the node that owns their source topic:
  /// "/vehicle/<id>/..." lives on node "vehicle-<id>". Everything else is
  /// node-agnostic within its role.
  static std::optional<std::string> pinned_node(const ResolvedService& service) {
    if (service.tmpl->behavior_kind != BehaviorKind::bridge) return std::nullopt;
    if (service.subscribes.empty()) return std::nullopt;
    auto segments = split(service.subscribes.front().substr(1), '/');
    if (segments.size() >= 2 && segments[0] == "vehicle") return "vehicle-" + segments[1];
    return std::nullopt;
  }

  SimKernel& kernel_;
  MessageBus& bus_;
  ControlPlane& cluster_;
  ServiceRegistry registry_;
  std::string node_;
  AppManagerConfig config_;
  bool attached_ = false;
  SubscriptionId task_subscription_ = 0;
  std::map<std::string, ApplicationInstance> instances_;  // by instance id
  std::map<std::string, std::string> live_;               // correlation key -> instance id
  std::map<std::string, PendingRetry> pending_retries_;   // by correlation key
  std::map<std::string, WorkloadDefinition> pending_relaunch_;  // by instance id
  std::set<std::string> seen_request_ids_;
  std::vector<Decision> decisions_;
  int next_instance_ = 1;
};

}  // namespace fleetsim
