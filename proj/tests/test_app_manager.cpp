#include <catch2/catch_amalgamated.hpp>

#include "fleetsim/app_manager.hpp"

using namespace fleetsim;

namespace {

MicroserviceTemplate bridge_template(const std::string& name, const std::string& stream) {
  MicroserviceTemplate t;
  t.name = name;
  t.capability_tags = {name};
  t.image_ref = "img/" + name + ":1";
  t.resource_request = {50, 64};
  t.config_params = {{"vehicle_id", "string"}};
  t.subscribes = {"/vehicle/{vehicle_id}/" + stream};
  t.publishes = {"/cloud/vehicle/{vehicle_id}/" + stream};
  t.behavior_kind = BehaviorKind::bridge;
  return t;
}

MicroserviceTemplate recorder_template() {
  MicroserviceTemplate t;
  t.name = "recorder";
  t.capability_tags = {"recorder"};
  t.image_ref = "img/recorder:1";
  t.resource_request = {500, 1024};
  t.config_params = {{"vehicle_a", "string"}, {"vehicle_b", "string"}, {"correlation_key", "string"}};
  t.subscribes = {"/cloud/vehicle/{vehicle_a}/pose", "/cloud/vehicle/{vehicle_b}/pose",
                  "/cloud/vehicle/{vehicle_a}/points", "/cloud/vehicle/{vehicle_b}/points"};
  t.behavior_kind = BehaviorKind::recorder;
  return t;
}

ServiceRegistry make_registry() {
  ServiceRegistry registry;
  registry.add(RegistryEntry{"pose-relay", {bridge_template("pose-bridge", "pose")}, true});
  registry.add(
      RegistryEntry{"pointcloud-relay", {bridge_template("pointcloud-bridge", "points")}, true});
  registry.add(RegistryEntry{"pair-recording", {recorder_template()}, true});
  // unverified entry offering a tempting capability
  MicroserviceTemplate radar;
  radar.name = "radar-fusion";
  radar.capability_tags = {"radar-fusion"};
  radar.image_ref = "img/radar:0";
  radar.resource_request = {100, 128};
  radar.behavior_kind = BehaviorKind::generic;
  registry.add(RegistryEntry{"radar", {radar}, false});
  return registry;
}

TaskDescription scenario_td(const std::string& request_id = "td-1") {
  TaskDescription td;
  td.request_id = request_id;
  td.correlation_key = "pair:0-14";
  td.intent = TaskIntent::deploy;
  td.required_capabilities = {
      {"pose-bridge", 2, {{{"vehicle_id", "0"}}, {{"vehicle_id", "14"}}}},
      {"pointcloud-bridge", 2, {{{"vehicle_id", "0"}}, {{"vehicle_id", "14"}}}},
      {"recorder",
       1,
       {{{"vehicle_a", "0"}, {"vehicle_b", "14"}, {"correlation_key", "pair:0-14"}}}}};
  td.data_sources = {"/cloud/vehicle/0/pose", "/cloud/vehicle/14/pose", "/cloud/vehicle/0/points",
                     "/cloud/vehicle/14/points"};
  td.placement_hint = "cloud";
  td.requested_by = "boot.operator-0";
  return td;
}

struct Fixture {
  SimKernel kernel;
  MessageBus bus{kernel};
  ControlPlane cluster{kernel};
  std::unique_ptr<ApplicationManager> manager;

  explicit Fixture(AppManagerConfig config = {}, ResourceRequest cloud_capacity = {4000, 8192},
                   bool with_edge = false) {
    for (const auto& node : {"cloud-0", "vehicle-0", "vehicle-14"}) bus.add_node(node);
    cluster.add_node("cloud-0", NodeRole::cloud, cloud_capacity);
    cluster.add_node("vehicle-0", NodeRole::vehicle, {1000, 1024});
    cluster.add_node("vehicle-14", NodeRole::vehicle, {1000, 1024});
    if (with_edge) {
      bus.add_node("edge-0");
      cluster.add_node("edge-0", NodeRole::edge, {2000, 4096});
    }
    cluster.start();
    manager = std::make_unique<ApplicationManager>(kernel, bus, cluster, make_registry(), "cloud-0",
                                                   config);
    manager->attach();
  }

  int pods_in_phase(PodPhase phase) {
    int n = 0;
    for (const auto& p : cluster.cluster_view().pods)
      if (p.phase == phase) ++n;
    return n;
  }
};

nlohmann::json cluster_fingerprint(ControlPlane& cluster) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& n : cluster.cluster_view().nodes)
    j.push_back({{"id", n.node_id}, {"cpu", n.allocated.cpu_milli}, {"mem", n.allocated.mem_mib}});
  for (const auto& p : cluster.cluster_view().pods)
    j.push_back({{"pod", p.pod_id}, {"phase", to_string(p.phase)}});
  return j;
}

}  // namespace

TEST_CASE("compose substitutes parameters into topics and configs") {
  Fixture f;
  auto services = f.manager->compose(scenario_td().required_capabilities, f.manager->registry());
  REQUIRE(services.size() == 5);
  CHECK(services[0].tmpl->name == "pose-bridge");
  CHECK(services[0].subscribes == std::vector<Topic>{"/vehicle/0/pose"});
  CHECK(services[0].publishes == std::vector<Topic>{"/cloud/vehicle/0/pose"});
  CHECK(services[1].subscribes == std::vector<Topic>{"/vehicle/14/pose"});
  CHECK(services[1].publishes == std::vector<Topic>{"/cloud/vehicle/14/pose"});
  CHECK(services[2].subscribes == std::vector<Topic>{"/vehicle/0/points"});
  CHECK(services[3].subscribes == std::vector<Topic>{"/vehicle/14/points"});
  CHECK(services[4].tmpl->name == "recorder");
  CHECK(services[4].config.at("correlation_key") == "pair:0-14");
  REQUIRE(services[4].subscribes.size() == 4);
  CHECK(services[4].subscribes[0] == "/cloud/vehicle/0/pose");
  CHECK(services[4].subscribes[3] == "/cloud/vehicle/14/points");
}

TEST_CASE("compose picks the lexicographically smallest template on ties") {
  Fixture f;
  ServiceRegistry registry = make_registry();
  MicroserviceTemplate alt = bridge_template("aaa-bridge", "pose");
  alt.capability_tags = {"pose-bridge"};
  registry.add(RegistryEntry{"alt", {alt}, true});
  auto services =
      f.manager->compose({{"pose-bridge", 1, {{{"vehicle_id", "0"}}}}}, registry);
  REQUIRE(services.size() == 1);
  CHECK(services[0].tmpl->name == "aaa-bridge");
}

TEST_CASE("compose errors") {
  Fixture f;
  const auto& registry = f.manager->registry();
  CHECK_THROWS_AS(f.manager->compose({{"warp-drive", 1, {}}}, registry), CompositionError);
  // present but unverified
  CHECK_THROWS_AS(f.manager->compose({{"radar-fusion", 1, {}}}, registry), CompositionError);
  // missing required parameter
  CHECK_THROWS_AS(f.manager->compose({{"pose-bridge", 1, {}}}, registry), CompositionError);
  CHECK_THROWS_AS(f.manager->compose({}, ServiceRegistry{}), CompositionError);
}

TEST_CASE("scenario deploy td yields a 5-pod workload and an instance") {
  Fixture f;
  auto decision = f.manager->handle_task(scenario_td());
  CHECK(decision.kind == DecisionKind::accepted);
  REQUIRE(decision.workload.has_value());
  CHECK(decision.workload->pods.size() == 5);
  CHECK_FALSE(decision.instance_id.empty());

  // bridges colocated with their source vehicles, recorder on the cloud
  std::map<std::string, std::string> placement;
  for (const auto& pod : decision.workload->pods) placement[pod.pod_name] = *pod.target_node;
  CHECK(placement.at("pose-bridge-0") == "vehicle-0");
  CHECK(placement.at("pose-bridge-1") == "vehicle-14");
  CHECK(placement.at("pointcloud-bridge-0") == "vehicle-0");
  CHECK(placement.at("pointcloud-bridge-1") == "vehicle-14");
  CHECK(placement.at("recorder-0") == "cloud-0");

  f.kernel.run_until(VirtualTime::from_seconds(6.0));
  CHECK(f.pods_in_phase(PodPhase::Running) == 5);
  CHECK(f.manager->find_live("pair:0-14") != nullptr);
  CHECK(f.manager->find_live("pair:0-14")->state == InstanceState::running);
}

TEST_CASE("duplicate deploys are rejected without new pods") {
  Fixture f;
  auto first = f.manager->handle_task(scenario_td("td-1"));
  CHECK(first.kind == DecisionKind::accepted);
  f.kernel.run_until(VirtualTime::from_seconds(6.0));
  auto before = cluster_fingerprint(f.cluster);

  SECTION("same request_id replayed") {
    auto again = f.manager->handle_task(scenario_td("td-1"));
    CHECK(again.kind == DecisionKind::rejected);
    CHECK(again.reason == "duplicate");
  }
  SECTION("same correlation key while instance is live") {
    auto again = f.manager->handle_task(scenario_td("td-2"));
    CHECK(again.kind == DecisionKind::rejected);
    CHECK(again.reason == "duplicate");
  }
  f.kernel.run_until(VirtualTime::from_seconds(7.0));
  CHECK(cluster_fingerprint(f.cluster) == before);
}

TEST_CASE("unsatisfiable capability is rejected with zero cluster mutations") {
  Fixture f;
  auto before = cluster_fingerprint(f.cluster);
  TaskDescription td = scenario_td();
  td.required_capabilities.push_back({"radar-fusion", 1, {}});
  auto decision = f.manager->handle_task(td);
  CHECK(decision.kind == DecisionKind::rejected);
  CHECK(decision.reason == "unsatisfiable");
  f.kernel.run_until(VirtualTime::from_seconds(2.0));
  CHECK(cluster_fingerprint(f.cluster) == before);
  CHECK(f.manager->find_live("pair:0-14") == nullptr);
}

TEST_CASE("malformed task descriptions are rejected as invalid") {
  Fixture f;
  TaskDescription td = scenario_td();
  td.required_capabilities.clear();
  auto d = f.manager->handle_task(td);
  CHECK(d.kind == DecisionKind::rejected);
  CHECK(d.reason == "invalid");

  TaskDescription no_key = scenario_td("td-9");
  no_key.correlation_key.clear();
  auto d2 = f.manager->handle_task(no_key);
  CHECK(d2.kind == DecisionKind::rejected);
  CHECK(d2.reason == "invalid");
}

TEST_CASE("conflict: postpone retries until capacity frees") {
  // cloud too small for the recorder while a blocker instance occupies it
  Fixture f{AppManagerConfig{ConflictStrategy::postpone, secs(1)}, ResourceRequest{600, 1200}};
  WorkloadDefinition blocker;
  blocker.owner = "blocker";
  PodSpec blockpod;
  blockpod.pod_name = "blocker-0";
  blockpod.image_ref = "img/blocker:1";
  blockpod.target_node = "cloud-0";
  blockpod.resource_request = {400, 512};
  blocker.pods = {blockpod};
  f.cluster.apply(blocker);
  f.kernel.run_until(VirtualTime::from_seconds(6.0));  // blocker Running, holds 400/512

  Decision decision;
  f.kernel.schedule(VirtualTime::from_seconds(6.5),
                    [&] { decision = f.manager->handle_task(scenario_td()); });
  f.kernel.run_until(VirtualTime::from_seconds(6.6));
  CHECK(decision.kind == DecisionKind::postponed);
  CHECK(decision.reason == "no-capacity");
  REQUIRE(decision.retry_at.has_value());
  CHECK(*decision.retry_at == VirtualTime::from_seconds(7.5));
  auto before = cluster_fingerprint(f.cluster);

  // free capacity at t=9; the retry at 9.5 should then be accepted
  WorkloadDefinition empty;
  empty.owner = "blocker";
  f.kernel.schedule(VirtualTime::from_seconds(9.0), [&] { f.cluster.apply(empty); });
  f.kernel.run_until(VirtualTime::from_seconds(16.0));

  const auto& decisions = f.manager->decisions();
  REQUIRE(decisions.size() >= 2);
  CHECK(decisions.back().kind == DecisionKind::accepted);
  CHECK(f.manager->find_live("pair:0-14") != nullptr);
  CHECK(f.manager->find_live("pair:0-14")->state == InstanceState::running);
  (void)before;
}

TEST_CASE("conflict: offload places the recorder on an alternative node") {
  Fixture f{AppManagerConfig{ConflictStrategy::offload, secs(1)}, ResourceRequest{100, 100},
            /*with_edge=*/true};
  auto decision = f.manager->handle_task(scenario_td());
  CHECK(decision.kind == DecisionKind::accepted);
  CHECK(decision.reason == "offloaded");
  REQUIRE(decision.workload.has_value());
  std::map<std::string, std::string> placement;
  for (const auto& pod : decision.workload->pods) placement[pod.pod_name] = *pod.target_node;
  CHECK(placement.at("recorder-0") == "edge-0");
  CHECK(placement.at("pose-bridge-0") == "vehicle-0");  // pinned pods are never offloaded
}

TEST_CASE("conflict: cancel rejects when nothing fits") {
  Fixture f{AppManagerConfig{ConflictStrategy::cancel, secs(1)}, ResourceRequest{100, 100}};
  auto before = cluster_fingerprint(f.cluster);
  auto decision = f.manager->handle_task(scenario_td());
  CHECK(decision.kind == DecisionKind::rejected);
  CHECK(decision.reason == "no-capacity");
  f.kernel.run_until(VirtualTime::from_seconds(2.0));
  CHECK(cluster_fingerprint(f.cluster) == before);
}

TEST_CASE("offload falls back to postpone when no node fits") {
  Fixture f{AppManagerConfig{ConflictStrategy::offload, secs(2)}, ResourceRequest{100, 100}};
  auto decision = f.manager->handle_task(scenario_td());
  CHECK(decision.kind == DecisionKind::postponed);
  REQUIRE(decision.retry_at.has_value());
}

TEST_CASE("shutdown tears the instance down and is idempotent") {
  Fixture f;
  f.manager->handle_task(scenario_td());
  f.kernel.run_until(VirtualTime::from_seconds(6.0));

  TaskDescription stop;
  stop.request_id = "td-stop";
  stop.correlation_key = "pair:0-14";
  stop.intent = TaskIntent::shutdown;
  Decision decision;
  f.kernel.schedule(VirtualTime::from_seconds(6.1), [&] { decision = f.manager->handle_task(stop); });
  f.kernel.run_until(VirtualTime::from_seconds(6.3));
  CHECK(decision.kind == DecisionKind::accepted);
  CHECK(f.pods_in_phase(PodPhase::Terminating) == 5);

  f.kernel.run_until(VirtualTime::from_seconds(8.0));
  CHECK(f.pods_in_phase(PodPhase::Terminated) == 5);
  auto* instance = f.manager->find_live("pair:0-14");
  CHECK(instance == nullptr);

  TaskDescription stop2 = stop;
  stop2.request_id = "td-stop-2";
  auto second = f.manager->handle_task(stop2);
  CHECK(second.kind == DecisionKind::rejected);
  CHECK(second.reason == "not-found");
}

TEST_CASE("shutdown of an unknown correlation key is not-found") {
  Fixture f;
  TaskDescription stop;
  stop.request_id = "td-x";
  stop.correlation_key = "pair:7-9";
  stop.intent = TaskIntent::shutdown;
  auto d = f.manager->handle_task(stop);
  CHECK(d.kind == DecisionKind::rejected);
  CHECK(d.reason == "not-found");
}

TEST_CASE("compose and place are deterministic") {
  Fixture f;
  auto view = f.cluster.cluster_view();
  auto services1 = f.manager->compose(scenario_td().required_capabilities, f.manager->registry());
  auto services2 = f.manager->compose(scenario_td().required_capabilities, f.manager->registry());
  auto w1 = f.manager->place(services1, view, scenario_td());
  auto w2 = f.manager->place(services2, view, scenario_td());
  REQUIRE(w1.pods.size() == w2.pods.size());
  for (std::size_t i = 0; i < w1.pods.size(); ++i) {
    CHECK(w1.pods[i].pod_name == w2.pods[i].pod_name);
    CHECK(w1.pods[i].target_node == w2.pods[i].target_node);
    CHECK(w1.pods[i].config == w2.pods[i].config);
    CHECK(w1.pods[i].subscribes == w2.pods[i].subscribes);
  }
}

TEST_CASE("placement prefers best fit, breaking ties by node id") {
  SimKernel kernel;
  std::vector<NodeStatus> nodes{
      {"cloud-b", NodeRole::cloud, {4000, 8192}, {0, 0}, true},
      {"cloud-a", NodeRole::cloud, {4000, 8192}, {0, 0}, true},
      {"cloud-tight", NodeRole::cloud, {4000, 8192}, {3300, 7000}, true},
  };
  // equal residuals on cloud-a/cloud-b: lexicographically smaller id wins only
  // when nothing tighter fits; cloud-tight has the smallest residual that fits
  auto chosen = ControlPlane::best_fit_node(nodes, {500, 1024}, NodeRole::cloud);
  REQUIRE(chosen.has_value());
  CHECK(*chosen == "cloud-tight");

  nodes[2].ready = false;
  chosen = ControlPlane::best_fit_node(nodes, {500, 1024}, NodeRole::cloud);
  REQUIRE(chosen.has_value());
  CHECK(*chosen == "cloud-a");

  CHECK_FALSE(
      ControlPlane::best_fit_node(nodes, {500, 1024}, NodeRole::edge).has_value());
}

TEST_CASE("reconfigure updates config in place without restarting pods") {
  Fixture f;
  f.manager->handle_task(scenario_td());
  f.kernel.run_until(VirtualTime::from_seconds(6.0));
  const auto* instance = f.manager->find_live("pair:0-14");
  REQUIRE(instance);
  std::string recorder_pod = ControlPlane::pod_id_for(instance->instance_id, "recorder-0");
  auto running_since = f.cluster.find_pod(recorder_pod)->phase_since;

  TaskDescription reconf = scenario_td("td-reconf");
  reconf.intent = TaskIntent::reconfigure;
  reconf.required_capabilities[2].params[0]["correlation_key"] = "pair:0-14/v2";
  Decision decision;
  f.kernel.schedule(VirtualTime::from_seconds(6.5),
                    [&] { decision = f.manager->handle_task(reconf); });
  f.kernel.run_until(VirtualTime::from_seconds(8.0));
  CHECK(decision.kind == DecisionKind::accepted);
  CHECK(decision.reason == "reconfigured");
  CHECK(f.cluster.find_pod(recorder_pod)->phase == PodPhase::Running);
  CHECK(f.cluster.find_pod(recorder_pod)->phase_since == running_since);  // no restart
  CHECK(f.cluster.find_pod_spec(recorder_pod)->config.at("correlation_key") == "pair:0-14/v2");
}

TEST_CASE("restart-style reconfigure drains and relaunches the pods") {
  AppManagerConfig config;
  config.restart_on_reconfigure = true;
  Fixture f{config};
  f.manager->handle_task(scenario_td());
  f.kernel.run_until(VirtualTime::from_seconds(6.0));
  const auto* instance = f.manager->find_live("pair:0-14");
  REQUIRE(instance);
  std::string recorder_pod = ControlPlane::pod_id_for(instance->instance_id, "recorder-0");
  auto first_running = f.cluster.find_pod(recorder_pod)->phase_since;

  TaskDescription reconf = scenario_td("td-reconf");
  reconf.intent = TaskIntent::reconfigure;
  reconf.required_capabilities[2].params[0]["correlation_key"] = "pair:0-14/v2";
  Decision decision;
  f.kernel.schedule(VirtualTime::from_seconds(6.5),
                    [&] { decision = f.manager->handle_task(reconf); });
  // drain (<= 1s) + relaunch (5s startup): comfortably done by t=14
  f.kernel.run_until(VirtualTime::from_seconds(14.0));
  CHECK(decision.kind == DecisionKind::accepted);
  CHECK(decision.reason == "reconfigured-restart");
  REQUIRE(f.cluster.find_pod(recorder_pod) != nullptr);
  CHECK(f.cluster.find_pod(recorder_pod)->phase == PodPhase::Running);
  CHECK(f.cluster.find_pod(recorder_pod)->phase_since > first_running);  // restarted
  CHECK(f.cluster.find_pod_spec(recorder_pod)->config.at("correlation_key") == "pair:0-14/v2");
  CHECK(f.manager->find_live("pair:0-14")->state == InstanceState::running);
}

TEST_CASE("task descriptions arriving on the bus are handled") {
  Fixture f;
  TaskDescription td = scenario_td();
  f.kernel.schedule(VirtualTime::from_seconds(1.0), [&] {
    MessageEnvelope env;
    env.topic = "/operator/tasks";
    env.publish_time = f.kernel.now();
    env.source_node = "cloud-0";
    env.schema_tag = "task";
    env.payload = task_payload(td);
    f.bus.publish(std::move(env));
  });
  std::vector<std::string> decision_payloads;
  f.bus.subscribe("cloud-0", "/operator/decisions", [&](const EnvelopePtr& env) {
    decision_payloads.emplace_back(env->payload.begin(), env->payload.end());
  });
  f.kernel.run_until(VirtualTime::from_seconds(7.0));
  CHECK(f.manager->find_live("pair:0-14") != nullptr);
  REQUIRE(decision_payloads.size() == 1);
  auto j = nlohmann::json::parse(decision_payloads[0]);
  CHECK(j.at("kind") == "accepted");
  CHECK(j.at("request_id") == "td-1");
}
