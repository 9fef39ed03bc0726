#include "cpsclp/log.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace cpsclp {

namespace {

LogLevel from_env() {
  const char* raw = std::getenv("CPSCLP_LOG");
  if (!raw) return LogLevel::Quiet;
  const std::string s(raw);
  if (s == "info") return LogLevel::Info;
  if (s == "trace") return LogLevel::Trace;
  return LogLevel::Quiet;
}

std::atomic<int>& level_slot() {
  static std::atomic<int> slot{static_cast<int>(from_env())};
  return slot;
}

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(level_slot().load(std::memory_order_relaxed)); }

void set_log_level(LogLevel level) { level_slot().store(static_cast<int>(level)); }

}  // namespace cpsclp
