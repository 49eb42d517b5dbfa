#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <unordered_map>
#include <vector>

#include "fleetsim/time.hpp"

namespace fleetsim {

/// Snapshot of kernel counters. `wall_clock_elapsed` is measured host time
/// and is the only non-deterministic field.
struct KernelStats {
  std::uint64_t events_fired = 0;
  std::uint64_t events_cancelled = 0;
  VirtualTime final_time;
  std::chrono::nanoseconds wall_clock_elapsed{0};
};

/// Handle to a scheduled event, usable with SimKernel::cancel.
class EventHandle {
 public:
  EventHandle() = default;
  bool valid() const { return id_ != 0; }

 private:
  friend class SimKernel;
  explicit EventHandle(std::uint64_t id) : id_{id} {}
  std::uint64_t id_ = 0;
};

/// Deterministic virtual-time event loop. All simulation activity runs from
/// callbacks scheduled here; ties at equal fire times execute in scheduling
/// order. Virtual time holds still while a callback runs.
///
/// Simulated latencies (link delay, pod startup) are expressed as virtual
/// durations between events; compute latencies are measured separately with
/// the host clock by the components that care.
class SimKernel {
 public:
  explicit SimKernel(std::uint64_t seed = 0) : rng_{seed} {}

  SimKernel(const SimKernel&) = delete;
  SimKernel& operator=(const SimKernel&) = delete;

  VirtualTime now() const { return now_; }

  /// Single seeded generator for all randomness in a run.
  std::mt19937_64& rng() { return rng_; }

  EventHandle schedule(VirtualTime at, std::function<void()> action) {
    if (at < now_) {
      throw SimError("schedule: fire time " + format_time(at) + " is in the past (now " +
                     format_time(now_) + ")");
    }
    std::uint64_t id = next_id_++;
    std::uint64_t seq = next_seq_++;
    pending_.emplace(id, std::move(action));
    queue_.push(QueueEntry{at.ns(), seq, id});
    return EventHandle{id};
  }

  EventHandle schedule_after(Duration delay, std::function<void()> action) {
    return schedule(now_ + delay, std::move(action));
  }

  /// True iff the event had not fired yet and is now removed. Cancelling a
  /// fired, cancelled or unknown handle returns false.
  bool cancel(EventHandle handle) {
    auto it = pending_.find(handle.id_);
    if (it == pending_.end()) return false;
    pending_.erase(it);
    ++stats_.events_cancelled;
    return true;
  }

  /// Runs every event with fire_at <= t_end in (fire_at, sequence) order,
  /// then parks the clock at t_end.
  KernelStats run_until(VirtualTime t_end) {
    if (t_end < now_) throw SimError("run_until: target time is in the past");
    if (running_) throw SimError("run_until: re-entrant call from a callback");
    running_ = true;
    auto wall_start = std::chrono::steady_clock::now();
    while (!queue_.empty()) {
      const QueueEntry top = queue_.top();
      if (top.fire_ns > t_end.ns()) break;
      queue_.pop();
      auto it = pending_.find(top.id);
      if (it == pending_.end()) continue;  // cancelled
      std::function<void()> action = std::move(it->second);
      pending_.erase(it);
      now_ = VirtualTime::from_ns(top.fire_ns);
      ++stats_.events_fired;
      action();
    }
    now_ = t_end;
    stats_.final_time = now_;
    stats_.wall_clock_elapsed += std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - wall_start);
    running_ = false;
    return stats_;
  }

  const KernelStats& stats() const { return stats_; }
  std::size_t pending_count() const { return pending_.size(); }

 private:
  struct QueueEntry {
    std::int64_t fire_ns;
    std::uint64_t seq;
    std::uint64_t id;
    bool operator>(const QueueEntry& o) const {
      if (fire_ns != o.fire_ns) return fire_ns > o.fire_ns;
      return seq > o.seq;
    }
  };

  VirtualTime now_;
  bool running_ = false;
  std::uint64_t next_id_ = 1;
  std::uint64_t next_seq_ = 0;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<QueueEntry>> queue_;
  std::unordered_map<std::uint64_t, std::function<void()>> pending_;
  std::mt19937_64 rng_;
  KernelStats stats_;
};

}  // namespace fleetsim
