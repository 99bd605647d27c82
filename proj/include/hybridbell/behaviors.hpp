#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "hybridbell/numerics.hpp"
#include "hybridbell/phase_space.hpp"

namespace hybridbell {

/// Quadrature phases (phi_1, phi_2) of Alice and displacements (gamma_1, gamma_2) of Bob.
struct HybridSettings {
  std::array<double, 2> phi{0.0, 0.0};
  std::array<Complex, 2> gamma{Complex{0.0, 0.0}, Complex{0.0, 0.0}};

  /// Requires phi in [0, 2 pi) and finite gamma.
  void validate() const;
  /// Same settings with each phase wrapped into [0, 2 pi).
  HybridSettings wrapped() const;
};

struct Efficiencies {
  double eta_a = 1.0;
  double eta_b = 1.0;

  void validate() const;
};

struct TmsvsParams {
  double r = 0.0;
  Efficiencies eff;

  void validate() const;
};

struct CatParams {
  Complex alpha0{0.0, 0.0};
  Efficiencies eff;

  void validate() const;
};

/// Location and scale of the dominant Gaussian of a quadrature distribution.
struct QuadratureWindow {
  double center = 0.0;
  double width = 1.0;
};

/**
 * Joint outcome densities P(x, n | phi_i, gamma_j) of the hybrid scheme:
 * a quadrature x measured by Alice and a click n in {0, 1} registered by Bob.
 *
 * Realizations supply the no-click density and the quadrature marginal; the
 * click density is always their difference, so summing over n reproduces the
 * marginal for both of Bob's settings.
 */
class Behavior {
 public:
  virtual ~Behavior() = default;

  /// P(x, n | phi_i, gamma_j); i, j in {1, 2}, n in {0, 1}.
  double pdf(double x, int n, int i, int j) const;

  virtual double noclick_density(double x, int i, int j) const = 0;
  virtual double marginal_x(double x, int i) const = 0;
  virtual const HybridSettings& settings() const = 0;
  virtual QuadratureWindow window(int i) const = 0;

  /// Integral of g over x at Alice's setting i, using the realization's preferred rule.
  virtual double integrate_x(const numerics::RealFunction& g, int i,
                             const numerics::IntegrationConfig& cfg) const;
};

using BehaviorPtr = std::shared_ptr<const Behavior>;

/// Throws std::out_of_range unless the index is 1 or 2.
void check_setting_index(int index, const char* name);

// Two-mode squeezed vacuum with lossy detectors.

double tmsvs_pdf(double x, int n, double phi, Complex gamma, const TmsvsParams& params);
double tmsvs_marginal(double x, double phi, const TmsvsParams& params);
/// P(0 | gamma; x; phi): no-click probability conditioned on the quadrature value.
double tmsvs_conditional_noclick(double x, double phi, Complex gamma, const TmsvsParams& params);
/// Supremum of the conditional no-click probability over (x, phi, gamma).
double tmsvs_conditional_noclick_max(const TmsvsParams& params);

class TmsvsBehavior final : public Behavior {
 public:
  TmsvsBehavior(const TmsvsParams& params, const HybridSettings& settings);

  double noclick_density(double x, int i, int j) const override;
  double marginal_x(double x, int i) const override;
  const HybridSettings& settings() const override { return settings_; }
  QuadratureWindow window(int i) const override;
  const TmsvsParams& params() const { return params_; }

 private:
  TmsvsParams params_;
  HybridSettings settings_;
};

// Hybrid entangled (cat) state (|alpha0>|0> + |-alpha0>|1>)/sqrt(2).

double cat_pdf(double x, int n, double phi, Complex gamma, const CatParams& params);
double cat_marginal(double x, double phi, const CatParams& params);

class CatBehavior final : public Behavior {
 public:
  CatBehavior(const CatParams& params, const HybridSettings& settings);

  double noclick_density(double x, int i, int j) const override;
  double marginal_x(double x, int i) const override;
  const HybridSettings& settings() const override { return settings_; }
  QuadratureWindow window(int i) const override;
  const CatParams& params() const { return params_; }

 private:
  CatParams params_;
  HybridSettings settings_;
};

/**
 * Product of displaced thermal states with Glauber-Sudarshan function
 * G(alpha_A; a, nbar_a) G(alpha_B; b, nbar_b), G a circular Gaussian of mean
 * photon number nbar. nbar = 0 gives coherent states. Always classical.
 */
struct ClassicalProductParams {
  Complex alpha_a{0.0, 0.0};
  Complex alpha_b{0.0, 0.0};
  double nbar_a = 0.0;
  double nbar_b = 0.0;

  void validate() const;
  /// The (non-negative) P function; requires nbar_a, nbar_b > 0.
  double quasiprobability(Complex alpha_a, Complex alpha_b) const;
};

class ClassicalProductBehavior final : public Behavior {
 public:
  ClassicalProductBehavior(const ClassicalProductParams& params, const HybridSettings& settings);

  double noclick_density(double x, int i, int j) const override;
  double marginal_x(double x, int i) const override;
  const HybridSettings& settings() const override { return settings_; }
  QuadratureWindow window(int i) const override;
  const ClassicalProductParams& params() const { return params_; }

 private:
  ClassicalProductParams params_;
  HybridSettings settings_;
};

/// P_u(x, n | phi, gamma) = P(x | phi) P(n | gamma) built from another behavior.
class FactorizedBehavior final : public Behavior {
 public:
  explicit FactorizedBehavior(BehaviorPtr source, const numerics::IntegrationConfig& cfg = {});

  double noclick_density(double x, int i, int j) const override;
  double marginal_x(double x, int i) const override;
  const HybridSettings& settings() const override { return source_->settings(); }
  QuadratureWindow window(int i) const override { return source_->window(i); }
  double integrate_x(const numerics::RealFunction& g, int i,
                     const numerics::IntegrationConfig& cfg) const override;

  /// Bob's no-click probability P(0 | gamma_j).
  double bob_noclick(int j) const;

 private:
  BehaviorPtr source_;
  std::array<double, 2> bob_noclick_{};
};

BehaviorPtr factorized(BehaviorPtr behavior, const numerics::IntegrationConfig& cfg = {});

/// One row of a tabulated behavior file.
struct TabulatedSample {
  double x;
  int n;
  int i;
  int j;
  double p;
};

/**
 * Behavior known only on a rectangular x-grid per setting pair. Values are
 * linearly interpolated and vanish outside the grid; integrals use the
 * trapezoidal rule on the grid nodes.
 */
class TabulatedBehavior final : public Behavior {
 public:
  TabulatedBehavior(const std::vector<TabulatedSample>& samples, const HybridSettings& settings);

  double noclick_density(double x, int i, int j) const override;
  double marginal_x(double x, int i) const override;
  const HybridSettings& settings() const override { return settings_; }
  QuadratureWindow window(int i) const override;
  double integrate_x(const numerics::RealFunction& g, int i,
                     const numerics::IntegrationConfig& cfg) const override;

  /// Tabulated value for the given outcome, interpolated in x.
  double tabulated(double x, int n, int i, int j) const;

 private:
  struct Slice {
    std::vector<double> x;
    std::array<std::vector<double>, 2> p;
  };
  const Slice& slice(int i, int j) const { return slices_[2 * (i - 1) + (j - 1)]; }

  std::array<Slice, 4> slices_;
  std::array<std::vector<double>, 2> nodes_;
  HybridSettings settings_;
};

/// Samples `behavior` on `x_grid` for all outcomes and setting pairs.
std::vector<TabulatedSample> tabulate(const Behavior& behavior, const std::vector<double>& x_grid);

/// Writes the `x,n,i,j,p` CSV schema.
void write_tabulated_csv(std::ostream& out, const std::vector<TabulatedSample>& rows);
/// Parses the `x,n,i,j,p` CSV schema; throws std::runtime_error on malformed input.
std::vector<TabulatedSample> read_tabulated_csv(std::istream& in);

struct Outcome {
  double x;
  int n;
};

/**
 * Draws `count` outcomes for settings (phi_i, gamma_j): x by inverse transform
 * of the marginal, then n as a Bernoulli variable with the conditional
 * no-click probability. Draw k depends only on (seed, k).
 */
std::vector<Outcome> sample_outcomes(const Behavior& behavior, int i, int j, long count,
                                     std::uint64_t seed);

/// Uniform variate in [0, 1) from a counter-based hash of (seed, index, stream).
double counter_uniform(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

}  // namespace hybridbell
