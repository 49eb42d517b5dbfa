#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fleetsim {

/// Error type for contract violations across the library (scheduling in the
/// past, unknown nodes, malformed patterns, ...).
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Durations in simulated time. Nanosecond ticks so that periodic rates like
/// 100 Hz divide exactly.
using Duration = std::chrono::nanoseconds;

constexpr Duration nanos(std::int64_t ns) { return Duration{ns}; }
constexpr Duration micros(std::int64_t us) { return Duration{us * 1000}; }
constexpr Duration millis(std::int64_t ms) { return Duration{ms * 1'000'000}; }
constexpr Duration secs(std::int64_t s) { return Duration{s * 1'000'000'000}; }

inline Duration secs_f(double s) {
  return Duration{static_cast<std::int64_t>(s * 1e9 + (s >= 0 ? 0.5 : -0.5))};
}

/// Publish period for a rate in Hz.
inline Duration hz_period(double hz) {
  if (hz <= 0.0) throw SimError("rate must be positive");
  return Duration{static_cast<std::int64_t>(1e9 / hz + 0.5)};
}

inline double to_seconds(Duration d) { return static_cast<double>(d.count()) / 1e9; }
inline double to_millis(Duration d) { return static_cast<double>(d.count()) / 1e6; }

/// Absolute instant in simulated time, nanoseconds since scenario start.
/// Never negative.
class VirtualTime {
 public:
  constexpr VirtualTime() = default;
  // an instant is a duration since scenario start
  constexpr VirtualTime(Duration since_start) : ns_{since_start.count()} {}

  static constexpr VirtualTime from_ns(std::int64_t ns) { return VirtualTime{ns}; }
  static VirtualTime from_seconds(double s) { return VirtualTime{secs_f(s).count()}; }

  constexpr std::int64_t ns() const { return ns_; }
  double seconds() const { return static_cast<double>(ns_) / 1e9; }
  double millis() const { return static_cast<double>(ns_) / 1e6; }

  constexpr auto operator<=>(const VirtualTime&) const = default;

  constexpr VirtualTime operator+(Duration d) const { return VirtualTime{ns_ + d.count()}; }
  constexpr VirtualTime operator-(Duration d) const { return VirtualTime{ns_ - d.count()}; }
  constexpr Duration operator-(VirtualTime other) const { return Duration{ns_ - other.ns_}; }

  VirtualTime& operator+=(Duration d) {
    ns_ += d.count();
    return *this;
  }

 private:
  constexpr explicit VirtualTime(std::int64_t ns) : ns_{ns} {}
  std::int64_t ns_ = 0;
};

inline std::string format_time(VirtualTime t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6fs", t.seconds());
  return buf;
}

}  // namespace fleetsim
