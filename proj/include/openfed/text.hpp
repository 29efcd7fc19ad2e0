#pragma once

#include <charconv>
#include <string>
#include <system_error>

#include "openfed/errors.hpp"

namespace openfed {

// Shortest decimal form that parses back to the same bits; locale-free.
inline std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw config_error("'" + s + "' is not a number");
    }
    return v;
}

}  // namespace openfed
