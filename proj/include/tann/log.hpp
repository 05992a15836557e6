#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace tann {

enum class LogLevel { error = 0, info = 1, debug = 2 };

// Level from THEME_ANNOTATE_LOG (error|info|debug); defaults to error.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("THEME_ANNOTATE_LOG");
    const std::string_view v = env ? env : "";
    if (v == "debug") return LogLevel::debug;
    if (v == "info") return LogLevel::info;
    return LogLevel::error;
  }();
  return level;
}

inline void log(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static std::mutex mu;
  static constexpr const char* names[] = {"error", "info", "debug"};
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

}  // namespace tann
