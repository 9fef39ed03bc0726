#pragma once

#include <cstdio>
#include <utility>

#include <fmt/format.h>

namespace cpsclp {

enum class LogLevel { Quiet = 0, Info = 1, Trace = 2 };

/// Reads CPSCLP_LOG (quiet|info|trace) on first use; default quiet.
LogLevel log_level();
void set_log_level(LogLevel level);

template <typename... Args>
void log_at(LogLevel level, fmt::format_string<Args...> format, Args&&... args) {
  if (log_level() < level) return;
  fmt::print(stderr, format, std::forward<Args>(args)...);
  std::fputc('\n', stderr);
}

}  // namespace cpsclp
