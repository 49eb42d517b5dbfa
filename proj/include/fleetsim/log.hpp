#pragma once

#include <cstdio>
#include <string>
#include <string_view>

namespace fleetsim::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

inline Level& threshold() {
  static Level level = Level::warn;
  return level;
}

inline void set_level(Level level) { threshold() = level; }

inline bool set_level(std::string_view name) {
  if (name == "debug") threshold() = Level::debug;
  else if (name == "info") threshold() = Level::info;
  else if (name == "warn") threshold() = Level::warn;
  else if (name == "error") threshold() = Level::error;
  else if (name == "off") threshold() = Level::off;
  else return false;
  return true;
}

inline const char* level_name(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    default: return "off";
  }
}

inline void write(Level level, std::string_view component, const std::string& msg) {
  if (level < threshold()) return;
  std::fprintf(stderr, "[%s] %.*s: %s\n", level_name(level),
               static_cast<int>(component.size()), component.data(), msg.c_str());
}

inline void debug(std::string_view c, const std::string& m) { write(Level::debug, c, m); }
inline void info(std::string_view c, const std::string& m) { write(Level::info, c, m); }
inline void warn(std::string_view c, const std::string& m) { write(Level::warn, c, m); }
inline void error(std::string_view c, const std::string& m) { write(Level::error, c, m); }

}  // namespace fleetsim::log
