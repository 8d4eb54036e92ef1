#include "scotti/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace scotti {

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("SCOTTI_LOG");
    if (!env) return LogLevel::Error;
    if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
    if (std::strcmp(env, "info") == 0) return LogLevel::Info;
    return LogLevel::Error;
  }();
  return level;
}

void log_msg(LogLevel level, const std::string& msg) {
  if (int(level) > int(log_level()) && level != LogLevel::Error) return;
  const char* tag = level == LogLevel::Error ? "error" : (level == LogLevel::Info ? "info" : "debug");
  std::fprintf(stderr, "[scotti %s] %s\n", tag, msg.c_str());
}

void log_warn(const std::string& msg) {
  std::fprintf(stderr, "[scotti warn] %s\n", msg.c_str());
}

}  // namespace scotti
