#pragma once

#include <cstdio>
#include <string>

namespace mmskit::detail {

/// Round-trippable decimal form used in every CSV the library writes.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace mmskit::detail
