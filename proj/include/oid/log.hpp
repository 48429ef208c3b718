#pragma once

#include <string_view>

namespace oid {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Quiet = 3 };

/// Messages below the threshold are dropped. Defaults to Warn, or to the
/// value of OID_LOG (debug|info|warn|quiet) when set.
void set_log_level(LogLevel level);
LogLevel log_level();
/// Thread-safe line-oriented logging to stderr.
void log_message(LogLevel level, std::string_view message);

inline void log_info(std::string_view m) { log_message(LogLevel::Info, m); }
inline void log_warn(std::string_view m) { log_message(LogLevel::Warn, m); }
inline void log_debug(std::string_view m) { log_message(LogLevel::Debug, m); }

}  // namespace oid
