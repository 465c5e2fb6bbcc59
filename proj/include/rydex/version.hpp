#pragma once

#define RYDEX_VERSION "0.1.0"

namespace rydex {
inline const char* version() { return RYDEX_VERSION; }
}
