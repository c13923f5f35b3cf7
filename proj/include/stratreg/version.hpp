#pragma once

#define STRATREG_VERSION "0.1.0"

namespace stratreg {

inline const char* version() { return STRATREG_VERSION; }

} // namespace stratreg
