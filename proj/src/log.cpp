#include "openfed/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace openfed {

namespace {

log_level parse_level() {
    const char* env = std::getenv("OPENFED_LOG");
    if (env == nullptr) return log_level::warn;
    if (std::strcmp(env, "error") == 0) return log_level::error;
    if (std::strcmp(env, "warn") == 0) return log_level::warn;
    if (std::strcmp(env, "info") == 0) return log_level::info;
    if (std::strcmp(env, "debug") == 0) return log_level::debug;
    return log_level::warn;
}

const char* level_tag(log_level level) {
    switch (level) {
        case log_level::error: return "error";
        case log_level::warn: return "warn";
        case log_level::info: return "info";
        case log_level::debug: return "debug";
    }
    return "?";
}

std::mutex log_mutex;

}  // namespace

log_level current_log_level() {
    static const log_level level = parse_level();
    return level;
}

void vlog(log_level level, const char* fmt, std::va_list args) {
    if (static_cast<int>(level) > static_cast<int>(current_log_level())) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    std::fprintf(stderr, "[openfed %s] ", level_tag(level));
    std::vfprintf(stderr, fmt, args);
    std::fputc('\n', stderr);
}

#define OPENFED_LOG_IMPL(name, level)         \
    void name(const char* fmt, ...) {         \
        std::va_list args;                    \
        va_start(args, fmt);                  \
        vlog(level, fmt, args);               \
        va_end(args);                         \
    }

OPENFED_LOG_IMPL(log_error, log_level::error)
OPENFED_LOG_IMPL(log_warn, log_level::warn)
OPENFED_LOG_IMPL(log_info, log_level::info)
OPENFED_LOG_IMPL(log_debug, log_level::debug)

#undef OPENFED_LOG_IMPL

}  // namespace openfed
