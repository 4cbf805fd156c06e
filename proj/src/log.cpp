#include "semdrop/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace semdrop {

namespace {

LogLevel parse_level(const char* value) {
  if (value == nullptr) return LogLevel::kWarn;
  const std::string v(value);
  if (v == "off") return LogLevel::kOff;
  if (v == "error") return LogLevel::kError;
  if (v == "warn") return LogLevel::kWarn;
  if (v == "info") return LogLevel::kInfo;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::kError: return "error";
    case LogLevel::kWarn: return "warn";
    case LogLevel::kInfo: return "info";
    case LogLevel::kDebug: return "debug";
    default: return "";
  }
}

}  // namespace

LogLevel log_level() {
  static const LogLevel level = parse_level(std::getenv("SEMDROP_LOG"));
  return level;
}

void log_message(LogLevel level, const std::string& message) {
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  std::cerr << "[semdrop " << level_name(level) << "] " << message << '\n';
}

}  // namespace semdrop
