#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fleetsim/kernel.hpp"
#include "fleetsim/topic.hpp"

namespace fleetsim {

/// Timestamped, topic-addressed, schema-tagged opaque payload. Stands in for
/// the middleware messages exchanged between cluster components; nothing in
/// the transport layer ever decodes `payload`.
struct MessageEnvelope {
  Topic topic;
  VirtualTime publish_time;
  std::string source_node;
  std::string schema_tag;
  std::vector<std::uint8_t> payload;
  std::uint64_t sequence = 0;  // per (source_node, topic), assigned by the bus
};

using EnvelopePtr = std::shared_ptr<const MessageEnvelope>;

struct LinkSpec {
  std::string endpoint_a;
  std::string endpoint_b;
  Duration latency{0};
  bool symmetric = true;
};

/// Scope of a subscription. `node` sees only traffic published on the same
/// node (middleware-local topics); `cluster` additionally receives remote
/// publishes, delayed by the configured link latency — this models a brokered
/// transport endpoint. Plain subscriptions never flood across nodes.
enum class Reach { node, cluster };

using SubscriptionId = std::uint64_t;
using DeliveryHandler = std::function<void(const EnvelopePtr&)>;

/// Topic pub/sub fabric connecting simulated nodes.
///
/// Delivery timing: same-node at publish time, cross-node at publish time
/// plus the link latency in force at publish (in-flight messages keep their
/// latency if the link is re-configured). The receiving subscription must
/// exist when the envelope is published and still exist at delivery time;
/// unsubscribing drops anything still in flight.
class MessageBus {
 public:
  /// (envelope, destination node, delivery time) — observation hook for
  /// instrumentation; sees every successful delivery.
  using DeliveryTap = std::function<void(const MessageEnvelope&, const std::string&, VirtualTime)>;

  explicit MessageBus(SimKernel& kernel) : kernel_{kernel} {}

  void add_node(const std::string& node_id) { nodes_.insert(node_id); }
  bool has_node(const std::string& node_id) const { return nodes_.count(node_id) > 0; }

  /// Publishes an envelope; returns the per-(source, topic) sequence number.
  /// `envelope.sequence` is assigned here.
  std::uint64_t publish(MessageEnvelope envelope) {
    if (!has_node(envelope.source_node))
      throw SimError("publish: unknown source node '" + envelope.source_node + "'");
    require_valid_topic(envelope.topic);
    envelope.sequence = ++sequence_counters_[{envelope.source_node, envelope.topic}];
    auto shared = std::make_shared<const MessageEnvelope>(std::move(envelope));
    ++published_;
    for (const auto& [sub_id, sub] : subscriptions_) {
      const bool same_node = sub.node == shared->source_node;
      if (!same_node && sub.reach != Reach::cluster) continue;
      if (!topic_matches(sub.pattern, shared->topic)) continue;
      VirtualTime delivery_at =
          shared->publish_time + (same_node ? Duration{0} : link_latency(shared->source_node, sub.node));
      kernel_.schedule(delivery_at, [this, shared, id = sub_id, delivery_at] {
        auto it = subscriptions_.find(id);
        if (it == subscriptions_.end()) return;  // unsubscribed while in flight
        ++delivered_;
        if (tap_) tap_(*shared, it->second.node, delivery_at);
        it->second.handler(shared);
      });
    }
    return shared->sequence;
  }

  SubscriptionId subscribe(const std::string& node, const std::string& pattern,
                           DeliveryHandler handler, Reach reach = Reach::node) {
    if (!has_node(node)) throw SimError("subscribe: unknown node '" + node + "'");
    require_valid_pattern(pattern);
    SubscriptionId id = next_subscription_id_++;
    subscriptions_.emplace(id, Subscription{node, pattern, std::move(handler), reach});
    return id;
  }

  /// True iff the subscription existed. No deliveries happen to the handler
  /// at or after the virtual time of this call.
  bool unsubscribe(SubscriptionId id) { return subscriptions_.erase(id) > 0; }

  void set_link(const LinkSpec& spec) {
    if (!has_node(spec.endpoint_a)) throw SimError("set_link: unknown node '" + spec.endpoint_a + "'");
    if (!has_node(spec.endpoint_b)) throw SimError("set_link: unknown node '" + spec.endpoint_b + "'");
    if (spec.latency < Duration{0}) throw SimError("set_link: negative latency");
    links_[{spec.endpoint_a, spec.endpoint_b}] = spec.latency;
    if (spec.symmetric) links_[{spec.endpoint_b, spec.endpoint_a}] = spec.latency;
  }

  /// Latency from one node to another; unset links default to zero (the
  /// cluster interconnect is virtualized).
  Duration link_latency(const std::string& from, const std::string& to) const {
    if (from == to) return Duration{0};
    auto it = links_.find({from, to});
    return it == links_.end() ? Duration{0} : it->second;
  }

  void set_delivery_tap(DeliveryTap tap) { tap_ = std::move(tap); }

  std::uint64_t published_count() const { return published_; }
  std::uint64_t delivered_count() const { return delivered_; }
  std::size_t subscription_count() const { return subscriptions_.size(); }

 private:
  struct Subscription {
    std::string node;
    std::string pattern;
    DeliveryHandler handler;
    Reach reach;
  };

  SimKernel& kernel_;
  std::set<std::string> nodes_;
  // ordered map: publish fan-out iterates in subscription-id order, which
  // keeps same-instant deliveries deterministic
  std::map<SubscriptionId, Subscription> subscriptions_;
  std::map<std::pair<std::string, std::string>, Duration> links_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> sequence_counters_;
  SubscriptionId next_subscription_id_ = 1;
  std::uint64_t published_ = 0;
  std::uint64_t delivered_ = 0;
  DeliveryTap tap_;
};

}  // namespace fleetsim
