#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "sbench/errors.hpp"
#include "sbench/geometry.hpp"

namespace sbench {

// Round-trip-exact double formatting for text sidecars.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_mbr(const MBR& r) {
    return fmt_g17(r.lo_x) + " " + fmt_g17(r.lo_y) + " " + fmt_g17(r.hi_x) +
           " " + fmt_g17(r.hi_y);
}

inline MBR parse_mbr(const std::string& s) {
    std::istringstream is(s);
    MBR r;
    if (!(is >> r.lo_x >> r.lo_y >> r.hi_x >> r.hi_y))
        throw structure_error("bad rect text: " + s);
    return r;
}

inline std::vector<double> parse_doubles(const std::string& s) {
    std::istringstream is(s);
    std::vector<double> out;
    double v;
    while (is >> v) out.push_back(v);
    return out;
}

}  // namespace sbench
