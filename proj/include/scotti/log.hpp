#pragma once

#include <string>

namespace scotti {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

// Level comes from SCOTTI_LOG (error|info|debug), read once. Messages go to
// stderr so file outputs stay byte-stable.
LogLevel log_level();
void log_msg(LogLevel level, const std::string& msg);

inline void log_error(const std::string& m) { log_msg(LogLevel::Error, m); }
inline void log_info(const std::string& m) { log_msg(LogLevel::Info, m); }
inline void log_debug(const std::string& m) { log_msg(LogLevel::Debug, m); }

// warnings always print
void log_warn(const std::string& msg);

}  // namespace scotti
