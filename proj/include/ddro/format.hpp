#pragma once

#include <string>

namespace ddro {

// Shortest round-trip decimal form of a double ("%.17g" trimmed), so CSV
// output is byte-stable across runs and parses back exactly.
std::string fmt_double(double v);

}  // namespace ddro
