#pragma once

#include <string>

namespace hybridbell {

/// Shortest-safe round-trip text for a double: 17 significant digits.
std::string format_double(double value);

}  // namespace hybridbell
