#include "hybridbell/format.hpp"

#include <cstdio>

namespace hybridbell {

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

}  // namespace hybridbell
