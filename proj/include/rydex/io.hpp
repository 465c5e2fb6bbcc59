#pragma once

#include <cstdio>
#include <map>
#include <ostream>
#include <string>

#include "rydex/version.hpp"

namespace rydex {

/// 12 significant digits, locale-independent.
inline std::string format_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

/// '#'-prefixed header: tool version plus the fully resolved configuration,
/// one key per line in sorted order. Identical config -> identical bytes.
inline void write_csv_header(std::ostream& os, const std::map<std::string, std::string>& resolved) {
    os << "# rydex " << RYDEX_VERSION << "\n";
    for (const auto& [k, v] : resolved) os << "# " << k << " = " << v << "\n";
}

}  // namespace rydex
