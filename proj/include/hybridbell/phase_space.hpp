#pragma once

#include <complex>

namespace hybridbell {

using Complex = std::complex<double>;

/// Dimensionless field amplitude or local-oscillator displacement.
using CoherentAmplitude = Complex;

namespace phase_space {

/// Operator-ordering parameter s in [-1, 1].
class OrderingParam {
 public:
  explicit OrderingParam(double s);
  double value() const { return s_; }

 private:
  double s_;
};

/**
 * Symbol of balanced homodyne detection paired with the quasiprobability of
 * ordering s:
 *
 *   (pi s)^{-1/2} exp(-[x - sqrt(2) Re(alpha e^{-i phi})]^2 / s).
 *
 * s = 1 gives the Q symbol. The s -> 0 limit is a Dirac delta and is rejected
 * with std::domain_error.
 */
double bhd_symbol(double x, double phi, CoherentAmplitude alpha, double s);

/// Click (n = 1) or no-click (n = 0) Q symbol of displaced on/off detection.
double uhd_symbol(int n, CoherentAmplitude gamma, CoherentAmplitude alpha);

}  // namespace phase_space
}  // namespace hybridbell
