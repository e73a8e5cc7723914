#pragma once

#define GPURSUIT_VERSION "0.1.0"

namespace gpursuit {

inline const char* version() { return GPURSUIT_VERSION; }

} // namespace gpursuit
