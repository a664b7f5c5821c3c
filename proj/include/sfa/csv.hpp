#pragma once

#include <cstdio>
#include <string>

namespace sfa {

// floats are printed with 17 significant digits so CSV round-trips are
// bit-stable across runs
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace sfa
