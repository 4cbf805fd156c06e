#pragma once

#include <sstream>
#include <string>

namespace semdrop {

enum class LogLevel { kOff = 0, kError = 1, kWarn = 2, kInfo = 3, kDebug = 4 };

// Current level, read once from the SEMDROP_LOG environment variable
// (off|error|warn|info|debug). Defaults to warn.
LogLevel log_level();

void log_message(LogLevel level, const std::string& message);

namespace detail {
template <typename... Args>
std::string log_concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}
}  // namespace detail

template <typename... Args>
void log_warn(Args&&... args) {
  if (log_level() >= LogLevel::kWarn) {
    log_message(LogLevel::kWarn, detail::log_concat(std::forward<Args>(args)...));
  }
}

template <typename... Args>
void log_info(Args&&... args) {
  if (log_level() >= LogLevel::kInfo) {
    log_message(LogLevel::kInfo, detail::log_concat(std::forward<Args>(args)...));
  }
}

template <typename... Args>
void log_debug(Args&&... args) {
  if (log_level() >= LogLevel::kDebug) {
    log_message(LogLevel::kDebug, detail::log_concat(std::forward<Args>(args)...));
  }
}

}  // namespace semdrop
