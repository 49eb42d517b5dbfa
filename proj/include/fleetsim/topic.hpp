#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fleetsim/time.hpp"
#include "fleetsim/util.hpp"

namespace fleetsim {

/// Topics are slash-separated paths like "/vehicle/3/pose".
using Topic = std::string;

/// Valid topic: leading '/', at least one segment, all segments non-empty,
/// no trailing slash, no wildcard characters.
inline bool is_valid_topic(std::string_view topic) {
  if (topic.size() < 2 || topic[0] != '/') return false;
  if (topic.back() == '/') return false;
  std::size_t seg_len = 0;
  for (std::size_t i = 1; i < topic.size(); ++i) {
    char c = topic[i];
    if (c == '/') {
      if (seg_len == 0) return false;
      seg_len = 0;
    } else {
      if (c == '+' || c == '#') return false;
      ++seg_len;
    }
  }
  return seg_len > 0;
}

/// Pattern syntax is MQTT-flavoured: '+' matches exactly one segment,
/// '#' matches any suffix (zero or more segments) and may only appear as the
/// final segment. The bare pattern "#" matches everything.
inline bool is_valid_pattern(std::string_view pattern) {
  if (pattern == "#") return true;
  if (pattern.size() < 2 || pattern[0] != '/') return false;
  if (pattern.back() == '/') return false;
  auto segments = split(pattern.substr(1), '/');
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::string& seg = segments[i];
    if (seg.empty()) return false;
    if (seg == "+") continue;
    if (seg == "#") {
      if (i + 1 != segments.size()) return false;
      continue;
    }
    if (seg.find('+') != std::string::npos || seg.find('#') != std::string::npos) return false;
  }
  return true;
}

inline bool topic_matches(std::string_view pattern, std::string_view topic) {
  if (pattern == "#") return true;
  if (pattern.empty() || topic.empty()) return false;
  if (pattern[0] != '/' || topic[0] != '/') return false;
  auto pat = split(pattern.substr(1), '/');
  auto top = split(topic.substr(1), '/');
  std::size_t i = 0;
  for (; i < pat.size(); ++i) {
    if (pat[i] == "#") return true;  // matches the (possibly empty) rest
    if (i >= top.size()) return false;
    if (pat[i] == "+") continue;
    if (pat[i] != top[i]) return false;
  }
  return i == top.size();
}

inline void require_valid_topic(std::string_view topic) {
  if (!is_valid_topic(topic)) throw SimError("invalid topic: '" + std::string(topic) + "'");
}

inline void require_valid_pattern(std::string_view pattern) {
  if (!is_valid_pattern(pattern))
    throw SimError("invalid topic pattern: '" + std::string(pattern) + "'");
}

}  // namespace fleetsim
