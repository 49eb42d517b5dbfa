#include <catch2/catch_amalgamated.hpp>

#include "fleetsim/detector.hpp"

using namespace fleetsim;

namespace {

struct Fixture {
  SimKernel kernel;
  MessageBus bus{kernel};
  Fixture() {
    bus.add_node("cloud");
    bus.add_node("vehicle-0");
  }

  void publish(const std::string& topic, const std::string& node, std::uint8_t tag = 0,
               const std::string& schema = "pose") {
    MessageEnvelope env;
    env.topic = topic;
    env.publish_time = kernel.now();
    env.source_node = node;
    env.schema_tag = schema;
    env.payload = {tag};
    bus.publish(std::move(env));
  }
};

class CountingAnalyzer : public Analyzer {
 public:
  explicit CountingAnalyzer(std::string type) : type_{std::move(type)} {}
  std::string name() const override { return "counting:" + type_; }
  std::vector<Event> analyze(VirtualTime now, const TimeWindowBuffer& buffer) override {
    ++runs;
    last_size = buffer.size();
    Event e{type_, now, "key:" + type_, {}};
    return {e};
  }
  int runs = 0;
  std::size_t last_size = 0;

 private:
  std::string type_;
};

class ThrowingAnalyzer : public Analyzer {
 public:
  std::string name() const override { return "throwing"; }
  std::vector<Event> analyze(VirtualTime, const TimeWindowBuffer&) override {
    throw std::runtime_error("malformed payload");
  }
};

class CollectingPlugin : public ActionPlugin {
 public:
  explicit CollectingPlugin(std::vector<std::string> filter = {}) : filter_{std::move(filter)} {}
  std::string name() const override { return "collector"; }
  const std::vector<std::string>& event_filter() const override { return filter_; }
  void on_event(const Event& e) override { events.push_back(e.event_type); }
  void on_envelope(const EnvelopePtr& env) override { envelopes.push_back(env); }
  std::vector<std::string> events;
  std::vector<EnvelopePtr> envelopes;

 private:
  std::vector<std::string> filter_;
};

class ThrowingPlugin : public ActionPlugin {
 public:
  std::string name() const override { return "thrower"; }
  void on_event(const Event&) override { throw std::runtime_error("plugin boom"); }
};

}  // namespace

TEST_CASE_METHOD(Fixture, "no analyzers yields no events") {
  DetectorConfig config;
  config.subscriptions = {"/vehicle/+/pose"};
  EventDetector detector{kernel, bus, "cloud", config};
  detector.attach();
  kernel.run_until(VirtualTime::from_seconds(1.0));
  CHECK(detector.stats().cycles == 10);  // cycles at 100ms..1000ms inclusive
  CHECK(detector.stats().events_emitted == 0);
}

TEST_CASE_METHOD(Fixture, "analyzers run once per cycle over the buffer") {
  DetectorConfig config;
  config.subscriptions = {"/vehicle/+/pose"};
  config.reach = Reach::cluster;
  EventDetector detector{kernel, bus, "cloud", config};
  auto* analyzer = new CountingAnalyzer("tick");
  detector.add_analyzer(std::unique_ptr<Analyzer>(analyzer));
  detector.attach();
  for (int k = 0; k < 10; ++k)
    kernel.schedule(VirtualTime::from_ns(k * 10'000'000),
                    [&] { publish("/vehicle/0/pose", "vehicle-0"); });
  kernel.run_until(VirtualTime::from_seconds(0.55));
  CHECK(analyzer->runs == 5);
  CHECK(analyzer->last_size == 10);
  CHECK(detector.stats().envelopes_ingested == 10);
}

TEST_CASE_METHOD(Fixture, "a throwing analyzer never suppresses the others") {
  DetectorConfig config;
  config.subscriptions = {"/vehicle/+/pose"};
  EventDetector detector{kernel, bus, "cloud", config};
  detector.add_analyzer(std::make_unique<ThrowingAnalyzer>());
  auto* ok = new CountingAnalyzer("ok");
  detector.add_analyzer(std::unique_ptr<Analyzer>(ok));
  auto collector = std::make_shared<CollectingPlugin>();
  detector.add_plugin(collector);
  detector.attach();
  kernel.run_until(millis(150));
  CHECK(ok->runs == 1);
  CHECK(detector.stats().analyzer_failures == 1);
  CHECK(collector->events == std::vector<std::string>{"ok"});
}

TEST_CASE_METHOD(Fixture, "events reach plugins in declaration order, filtered by type") {
  DetectorConfig config;
  config.subscriptions = {"/vehicle/+/pose"};
  EventDetector detector{kernel, bus, "cloud", config};
  detector.add_analyzer(std::make_unique<CountingAnalyzer>("pair-entered"));
  detector.add_analyzer(std::make_unique<CountingAnalyzer>("pair-left"));
  auto first = std::make_shared<CollectingPlugin>(std::vector<std::string>{"pair-entered"});
  auto second = std::make_shared<CollectingPlugin>();
  detector.add_plugin(first);
  detector.add_plugin(second);
  detector.attach();
  kernel.run_until(millis(100));
  CHECK(first->events == std::vector<std::string>{"pair-entered"});
  CHECK(second->events == std::vector<std::string>{"pair-entered", "pair-left"});
}

TEST_CASE_METHOD(Fixture, "a throwing plugin never suppresses the others") {
  DetectorConfig config;
  config.subscriptions = {"/vehicle/+/pose"};
  EventDetector detector{kernel, bus, "cloud", config};
  detector.add_analyzer(std::make_unique<CountingAnalyzer>("evt"));
  detector.add_plugin(std::make_shared<ThrowingPlugin>());
  auto collector = std::make_shared<CollectingPlugin>();
  detector.add_plugin(collector);
  detector.attach();
  kernel.run_until(millis(100));
  CHECK(collector->events == std::vector<std::string>{"evt"});
  CHECK(detector.stats().plugin_failures == 1);
}

TEST_CASE_METHOD(Fixture, "pass-through plugin sees envelopes byte-identical, no decode") {
  DetectorConfig config;
  config.subscriptions = {"/cloud/vehicle/0/pose"};
  EventDetector detector{kernel, bus, "cloud", config};
  auto collector = std::make_shared<CollectingPlugin>();
  detector.add_plugin(collector);
  detector.attach();
  kernel.schedule(millis(5), [&] { publish("/cloud/vehicle/0/pose", "cloud", 0x7f); });
  kernel.schedule(millis(6), [&] { publish("/cloud/other/topic", "cloud", 0x01); });
  kernel.run_until(millis(10));
  REQUIRE(collector->envelopes.size() == 1);  // unmatched topic never delivered
  CHECK(collector->envelopes[0]->payload == std::vector<std::uint8_t>{0x7f});
}

TEST_CASE_METHOD(Fixture, "detach stops cycles and ingestion") {
  DetectorConfig config;
  config.subscriptions = {"/vehicle/+/pose"};
  config.reach = Reach::cluster;
  EventDetector detector{kernel, bus, "cloud", config};
  auto* analyzer = new CountingAnalyzer("x");
  detector.add_analyzer(std::unique_ptr<Analyzer>(analyzer));
  detector.attach();
  kernel.schedule(millis(250), [&] { detector.detach(); });
  kernel.schedule(millis(300), [&] { publish("/vehicle/0/pose", "vehicle-0"); });
  kernel.run_until(VirtualTime::from_seconds(1.0));
  CHECK(analyzer->runs == 2);
  CHECK(detector.stats().envelopes_ingested == 0);
}
