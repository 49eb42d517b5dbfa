#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "fleetsim/bus.hpp"
#include "fleetsim/topic.hpp"

namespace fleetsim {

/// Ring buffer over the immediate past: retains every ingested envelope whose
/// publish_time lies in (now - window, now]. Entirely payload-agnostic.
///
/// Eviction is lazy — performed on ingest and when the horizon advances —
/// rather than timer-driven; observable behavior is the same.
class TimeWindowBuffer {
 public:
  explicit TimeWindowBuffer(Duration window) : window_{window} {
    if (window <= Duration{0}) throw SimError("buffer window must be positive");
  }

  Duration window() const { return window_; }

  /// Oldest publish_time still retained is strictly greater than this.
  VirtualTime horizon() const { return horizon_; }

  void ingest(EnvelopePtr envelope, VirtualTime now) {
    advance(now);
    auto& dq = topics_[envelope->topic];
    // per-topic order is (publish_time, arrival); arrivals are already
    // time-ordered per publisher, but distinct publishers may interleave
    Entry entry{std::move(envelope), next_ingest_seq_++};
    if (!dq.empty() && dq.back().envelope->publish_time > entry.envelope->publish_time) {
      auto pos = std::upper_bound(dq.begin(), dq.end(), entry, [](const Entry& a, const Entry& b) {
        return a.envelope->publish_time < b.envelope->publish_time;
      });
      dq.insert(pos, std::move(entry));
    } else {
      dq.push_back(std::move(entry));
    }
  }

  /// Drops entries that have fallen out of the window as of `now`.
  void advance(VirtualTime now) {
    VirtualTime horizon = now - window_;
    if (horizon <= horizon_) return;
    horizon_ = horizon;
    for (auto it = topics_.begin(); it != topics_.end();) {
      auto& dq = it->second;
      while (!dq.empty() && dq.front().envelope->publish_time <= horizon_) dq.pop_front();
      if (dq.empty()) it = topics_.erase(it);
      else ++it;
    }
  }

  /// All retained envelopes with matching topic and publish_time in [from, to],
  /// globally ordered by (publish_time, arrival order).
  std::vector<EnvelopePtr> query(const std::string& pattern, VirtualTime from, VirtualTime to) const {
    require_valid_pattern(pattern);
    if (from > to) throw SimError("query: from > to");
    std::vector<const Entry*> hits;
    for (const auto& [topic, dq] : topics_) {
      if (!topic_matches(pattern, topic)) continue;
      for (const auto& entry : dq) {
        VirtualTime t = entry.envelope->publish_time;
        if (t >= from && t <= to && t > horizon_) hits.push_back(&entry);
      }
    }
    std::sort(hits.begin(), hits.end(), [](const Entry* a, const Entry* b) {
      if (a->envelope->publish_time != b->envelope->publish_time)
        return a->envelope->publish_time < b->envelope->publish_time;
      return a->ingest_seq < b->ingest_seq;
    });
    std::vector<EnvelopePtr> out;
    out.reserve(hits.size());
    for (const Entry* e : hits) out.push_back(e->envelope);
    return out;
  }

  /// Most recent envelope on an exact topic, if any.
  EnvelopePtr latest(const Topic& topic) const {
    auto it = topics_.find(topic);
    if (it == topics_.end() || it->second.empty()) return nullptr;
    return it->second.back().envelope;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, dq] : topics_) n += dq.size();
    return n;
  }

  std::size_t topic_count(const Topic& topic) const {
    auto it = topics_.find(topic);
    return it == topics_.end() ? 0 : it->second.size();
  }

  std::vector<Topic> topics() const {
    std::vector<Topic> out;
    out.reserve(topics_.size());
    for (const auto& [topic, _] : topics_) out.push_back(topic);
    return out;
  }

 private:
  struct Entry {
    EnvelopePtr envelope;
    std::uint64_t ingest_seq;
  };

  Duration window_;
  // exclusive lower bound of retention; starts below t=0 so early entries
  // are kept until the window genuinely slides past them
  VirtualTime horizon_ = VirtualTime::from_ns(-1);
  std::uint64_t next_ingest_seq_ = 0;
  std::map<Topic, std::deque<Entry>> topics_;
};

}  // namespace fleetsim
