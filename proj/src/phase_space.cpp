#include "hybridbell/phase_space.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hybridbell::phase_space {

namespace {

void require_finite(CoherentAmplitude a, const char* name) {
  if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
    throw std::domain_error(std::string(name) + " must be finite");
  }
}

}  // namespace

OrderingParam::OrderingParam(double s) : s_(s) {
  if (!(s >= -1.0 && s <= 1.0)) {
    throw std::domain_error("ordering parameter must lie in [-1, 1], got " + std::to_string(s));
  }
}

double bhd_symbol(double x, double phi, CoherentAmplitude alpha, double s) {
  if (!(s > 0.0)) {
    throw std::domain_error(
        "balanced homodyne symbol needs s in (0, 1]; s -> 0 is the Dirac-delta limit");
  }
  if (s > 1.0) throw std::domain_error("balanced homodyne symbol needs s <= 1");
  require_finite(alpha, "alpha");
  const double shift = std::numbers::sqrt2 * (alpha * std::polar(1.0, -phi)).real();
  const double d = x - shift;
  return std::exp(-d * d / s) / std::sqrt(std::numbers::pi * s);
}

double uhd_symbol(int n, CoherentAmplitude gamma, CoherentAmplitude alpha) {
  if (n != 0 && n != 1) {
    throw std::domain_error("click outcome must be 0 or 1, got " + std::to_string(n));
  }
  require_finite(gamma, "gamma");
  require_finite(alpha, "alpha");
  const double no_click = std::exp(-std::norm(alpha - gamma));
  // Complement taken in floating point so that the two outcomes sum to exactly 1.
  return n == 0 ? no_click : 1.0 - no_click;
}

}  // namespace hybridbell::phase_space
