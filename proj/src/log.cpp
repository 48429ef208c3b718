#include "oid/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace oid {
namespace {

LogLevel initial_level() {
  const char* env = std::getenv("OID_LOG");
  if (!env) return LogLevel::Warn;
  const std::string v = env;
  if (v == "debug") return LogLevel::Debug;
  if (v == "info") return LogLevel::Info;
  if (v == "quiet") return LogLevel::Quiet;
  return LogLevel::Warn;
}

std::atomic<LogLevel>& level_ref() {
  static std::atomic<LogLevel> level{initial_level()};
  return level;
}

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void set_log_level(LogLevel level) { level_ref() = level; }
LogLevel log_level() { return level_ref(); }

void log_message(LogLevel level, std::string_view message) {
  if (level < log_level() || level == LogLevel::Quiet) return;
  static constexpr const char* names[] = {"debug", "info", "warn"};
  std::lock_guard lock(log_mutex());
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace oid
