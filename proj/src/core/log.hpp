#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace lnadapt {

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Controlled by LNADAPT_LOG={error,info,debug}; defaults to error.
inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("LNADAPT_LOG");
    if (!env) return LogLevel::error;
    std::string v(env);
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    return LogLevel::error;
  }();
  return level;
}

inline void log_error(const std::string& msg) { std::cerr << "[error] " << msg << "\n"; }

inline void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) std::cerr << "[info] " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::debug) std::cerr << "[debug] " << msg << "\n";
}

}  // namespace lnadapt
