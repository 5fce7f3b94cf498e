#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace firecast {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

/// Level comes from WF_LOG_LEVEL (error|warn|info|debug), default warn.
inline LogLevel log_level() {
    static LogLevel lvl = [] {
        const char* e = std::getenv("WF_LOG_LEVEL");
        if (!e) return LogLevel::warn;
        if (std::strcmp(e, "error") == 0) return LogLevel::error;
        if (std::strcmp(e, "warn") == 0) return LogLevel::warn;
        if (std::strcmp(e, "info") == 0) return LogLevel::info;
        if (std::strcmp(e, "debug") == 0) return LogLevel::debug;
        return LogLevel::warn;
    }();
    return lvl;
}

template <typename... Args>
void log_at(LogLevel lvl, const char* tag, const char* fmt, Args... args) {
    if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
    std::fprintf(stderr, "[%s] ", tag);
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
}

#define FIRECAST_LOG_ERROR(...) ::firecast::log_at(::firecast::LogLevel::error, "error", __VA_ARGS__)
#define FIRECAST_LOG_WARN(...) ::firecast::log_at(::firecast::LogLevel::warn, "warn", __VA_ARGS__)
#define FIRECAST_LOG_INFO(...) ::firecast::log_at(::firecast::LogLevel::info, "info", __VA_ARGS__)
#define FIRECAST_LOG_DEBUG(...) ::firecast::log_at(::firecast::LogLevel::debug, "debug", __VA_ARGS__)

}  // namespace firecast
