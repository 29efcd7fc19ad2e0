#pragma once

#include <cstdarg>

namespace openfed {

// Verbosity is taken from the OPENFED_LOG environment variable
// (error|warn|info|debug); default is warn. Output goes to stderr.
enum class log_level { error = 0, warn = 1, info = 2, debug = 3 };

log_level current_log_level();

void vlog(log_level level, const char* fmt, std::va_list args);

#if defined(__GNUC__)
#define OPENFED_PRINTF_CHECK __attribute__((format(printf, 1, 2)))
#else
#define OPENFED_PRINTF_CHECK
#endif

void log_error(const char* fmt, ...) OPENFED_PRINTF_CHECK;
void log_warn(const char* fmt, ...) OPENFED_PRINTF_CHECK;
void log_info(const char* fmt, ...) OPENFED_PRINTF_CHECK;
void log_debug(const char* fmt, ...) OPENFED_PRINTF_CHECK;

#undef OPENFED_PRINTF_CHECK

}  // namespace openfed
