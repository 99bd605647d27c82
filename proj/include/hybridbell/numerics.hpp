#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace hybridbell::numerics {

using RealFunction = std::function<double(double)>;
using VectorFunction = std::function<double(const std::vector<double>&)>;
using PlaneFunction = std::function<double(std::complex<double>)>;

enum class QuadratureScheme { kAdaptiveSubdivision, kGaussHermite };

/**
 * Settings for integrals over the real line.
 *
 * The integration domain is truncated to
 * [center - truncation_halfwidth * width, center + truncation_halfwidth * width],
 * where `width` is the standard deviation of the dominant Gaussian factor of
 * the integrand. For the Gauss-Hermite scheme `width` sets the scale of the
 * Hermite weight instead and no truncation is applied.
 */
struct IntegrationConfig {
  QuadratureScheme scheme = QuadratureScheme::kAdaptiveSubdivision;
  int node_count = 21;
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  double truncation_halfwidth = 8.0;
  int max_subdivisions = 4000;

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

struct IntegrationResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
};

/// Thrown when the subdivision budget runs out before the tolerance is met.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double estimate, double error_bound)
      : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound) {}

  double estimate() const { return estimate_; }
  double error_bound() const { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

/// Globally adaptive Gauss-Kronrod (10/21) integration over [a, b].
IntegrationResult integrate_interval(const RealFunction& f, double a, double b,
                                     const IntegrationConfig& cfg);

IntegrationResult integrate_real_line_detailed(const RealFunction& f,
                                               const IntegrationConfig& cfg,
                                               double center, double width);

/// Integral of f over the real line; see IntegrationConfig for the domain.
double integrate_real_line(const RealFunction& f, const IntegrationConfig& cfg,
                           double center, double width);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes and weights for the weight function exp(-t^2) on the real line.
QuadratureRule gauss_hermite_rule(int n);

/// Nodes and weights on [-1, 1].
QuadratureRule gauss_legendre_rule(int n);

struct SearchBox {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dimension() const { return lower.size(); }
  void validate() const;
};

struct OptResult {
  double value = 0.0;
  std::vector<double> argument;
  long evaluations = 0;
  bool converged = false;
};

struct NelderMeadOptions {
  double diameter_tol = 1e-8;
  long max_evaluations = 20000;
  /// Initial simplex edge as a fraction of the box extent per coordinate.
  double initial_step = 0.1;
};

/// Bounded Nelder-Mead ascent started at `start`; points are clamped to the box.
OptResult nelder_mead_maximize(const VectorFunction& f, const std::vector<double>& start,
                               const SearchBox& box, const NelderMeadOptions& options = {});

struct MultistartOptions {
  NelderMeadOptions local;
  /// Local maxima of each start, in start order; filled when non-null.
  std::vector<OptResult>* local_results = nullptr;
};

/// Scrambled Halton points in the unit cube; a fixed seed fixes the points.
std::vector<std::vector<double>> low_discrepancy_points(std::size_t count, std::size_t dimension,
                                                        std::uint64_t seed);

/**
 * Best local maximum over `starts` low-discrepancy starting points, each
 * refined by bounded simplex ascent. Ties keep the earliest start.
 */
OptResult maximize_multistart(const VectorFunction& f, const SearchBox& box, int starts,
                              std::uint64_t seed, const MultistartOptions& options = {});

/// Supremum over the square circumscribing the disc |alpha - centroid| <= radius.
OptResult supremum_over_plane(const PlaneFunction& f, std::complex<double> centroid,
                              double radius, int starts, std::uint64_t seed,
                              const MultistartOptions& options = {});

}  // namespace hybridbell::numerics
