#pragma once

// Minimal leveled logging to stderr. The level comes from the CTPC_LOG
// environment variable: error, warn, info or debug (default warn).

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string_view>

namespace ctpc::log {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

inline Level level_from_env() {
  const char* env = std::getenv("CTPC_LOG");
  if (!env) return Level::warn;
  const std::string_view v(env);
  if (v == "error") return Level::error;
  if (v == "info") return Level::info;
  if (v == "debug") return Level::debug;
  return Level::warn;
}

inline Level current_level() {
  static const Level level = level_from_env();
  return level;
}

inline bool enabled(Level l) { return static_cast<int>(l) <= static_cast<int>(current_level()); }

template <class... Args>
void write(Level l, std::string_view tag, const Args&... args) {
  if (!enabled(l)) return;
  std::ostringstream os;
  os << "[ctpc " << tag << "] ";
  (os << ... << args);
  os << '\n';
  std::cerr << os.str();
}

template <class... Args>
void debug(const Args&... args) { write(Level::debug, "debug", args...); }
template <class... Args>
void info(const Args&... args) { write(Level::info, "info", args...); }
template <class... Args>
void warn(const Args&... args) { write(Level::warn, "warn", args...); }

}  // namespace ctpc::log
