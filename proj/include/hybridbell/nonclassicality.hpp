#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hybridbell/behaviors.hpp"
#include "hybridbell/numerics.hpp"

namespace hybridbell::nonclassicality {

/**
 * Parameters of the test function
 *   lambda(x, n, phi, gamma) = delta(x - x0) delta_{phi,phi0} (delta_{n,0} chi(gamma; alpha0) - D/2).
 * Amplitudes and displacements are real; Bob's side uses Q symbols.
 */
struct NcTestConfig {
  double x0 = 0.0;
  double alpha0 = 0.5;
  double phi0 = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 1.0;

  /// Requires finite entries and gamma1 != gamma2.
  void validate() const;
};

/// Thrown when the supremum defining D cannot be located reliably.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, double best)
      : std::runtime_error(what), best_(best) {}
  double best_estimate() const { return best_; }

 private:
  double best_;
};

/// chi(gamma_1; alpha0) for which = 1, chi(gamma_2; alpha0) for which = 2.
double chi(int which, const NcTestConfig& cfg);

/// sum_j chi(gamma_j; alpha0) Pi(0 | gamma_j; alpha).
double chi_weighted_noclick(const NcTestConfig& cfg, Complex alpha);

struct DResult {
  double D = 0.0;
  Complex argmax{0.0, 0.0};
  /// Local maxima found by the multistart search, one per start.
  std::vector<numerics::OptResult> probes;
};

/// D = sup over the alpha plane of chi_weighted_noclick; never negative.
DResult constant_D_detailed(const NcTestConfig& cfg, int starts = 64, std::uint64_t seed = 1);
double constant_D(const NcTestConfig& cfg);

struct NcSides {
  double lhs = 0.0;  ///< sum_j chi(gamma_j) P(x0, 0 | phi0, gamma_j)
  double rhs = 0.0;  ///< D P(x0 | phi0)
  double D = 0.0;
};

/// Both sides of the reduced inequality; phi0 and the gammas must match the behavior's settings.
NcSides nc_sides(const Behavior& behavior, const NcTestConfig& cfg);
NcSides nc_sides(const Behavior& behavior, const NcTestConfig& cfg, double D);

/// lhs - rhs; positive values violate the inequality.
double nc_lhs(const Behavior& behavior, const NcTestConfig& cfg);

/**
 * Supremum over Alice's and Bob's amplitudes of the coherent-state side of the
 * inequality, Pi_A(x0 | phi0; alpha_A) [sum_j chi_j Pi(0 | gamma_j; alpha_B) - D], at the
 * peak of the Alice Q symbol. Uses a dense grid plus simplex polish, independent
 * of the search that produced D. Expected to vanish when D is exact.
 */
double rhs_zero_check(const NcTestConfig& cfg, std::optional<double> D = std::nullopt);

struct NcTraceEntry {
  double x0;
  double alpha0;
  double R;
  bool feasible;
};

struct NcReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double D = 0.0;
  double R = 0.0;
  NcTestConfig config;
  std::vector<NcTraceEntry> trace;
};

/// R = (lhs - rhs) / rhs; throws std::domain_error when rhs <= 0.
NcReport relative_violation(const Behavior& behavior, const NcTestConfig& cfg);

/// Search region and marginal floor for optimize_nc.
struct NcSearch {
  double x0_halfwidth = 4.0;
  double alpha0_min = -4.0;
  double alpha0_max = 4.0;
  double marginal_floor = 0.0;  ///< candidates need P(x0 | phi0) > marginal_floor
  int grid = 41;
  numerics::NelderMeadOptions local;
};

/// x0 within 4 sqrt(sigma2 / 2), alpha0 in [-4, 4], floor 0.1 / sqrt(pi cosh 2r).
NcSearch tmsvs_nc_search(const TmsvsParams& params);

/**
 * Maximizes R over (x0, alpha0) on a coarse grid refined by simplex ascent,
 * rejecting candidates below the marginal floor. phi0 and the gammas come
 * from `base`. Throws std::runtime_error when no grid point is feasible.
 */
NcReport optimize_nc(const Behavior& behavior, const NcTestConfig& base, const NcSearch& search);

/// Settings of the R(r) figure: phi = (0, pi/2), gamma = (0, 1); phi0 = 0.
HybridSettings figure_settings();
NcTestConfig figure_config();

}  // namespace hybridbell::nonclassicality
