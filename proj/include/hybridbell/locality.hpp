#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "hybridbell/behaviors.hpp"
#include "hybridbell/numerics.hpp"

namespace hybridbell::locality {

/**
 * m(x, phi_i) = max{P(x,0|phi_i,gamma_1) + P(x,0|phi_i,gamma_2) - P(x|phi_i), 0} and
 * M(x, phi_i) = min{P(x,0|phi_i,gamma_1), P(x,0|phi_i,gamma_2)}, with their integrals.
 *
 * Holds a non-owning reference; the behavior must outlive this object.
 */
class MMFunctions {
 public:
  explicit MMFunctions(const Behavior& behavior, const numerics::IntegrationConfig& cfg = {});

  double m(double x, int i) const;
  double M(double x, int i) const;
  double mean_m(int i) const;
  double mean_M(int i) const;
  const Behavior& behavior() const { return *behavior_; }
  /// Support edges of m and crossings of the no-click densities at setting i.
  const std::vector<double>& kinks(int i) const;

 private:
  const Behavior* behavior_;
  std::array<std::vector<double>, 2> kinks_;
  std::array<double, 2> mean_m_{};
  std::array<double, 2> mean_M_{};
};

MMFunctions mm_functions(const Behavior& behavior, const numerics::IntegrationConfig& cfg = {});

struct LocalityMargins {
  double first;   ///< <m>_{phi_1} - <M>_{phi_2}
  double second;  ///< <m>_{phi_2} - <M>_{phi_1}
  double violation() const { return first > second ? first : second; }
};

LocalityMargins locality_margins(const MMFunctions& mm);

/// V = max{<m>_1 - <M>_2, <m>_2 - <M>_1}; V <= 0 means the behavior is local.
double locality_violation(const Behavior& behavior, const numerics::IntegrationConfig& cfg = {});

/// F = <m>_{phi_1} - <M>_{phi_2} for the squeezed vacuum; phases are wrapped into [0, 2 pi).
double locality_objective_F(const HybridSettings& settings, const TmsvsParams& params,
                            const numerics::IntegrationConfig& cfg = {});

/// Search box for F: (phi_1, phi_2, Re gamma_1, Im gamma_1, Re gamma_2, Im gamma_2).
numerics::SearchBox locality_search_box(double gamma_bound = 3.0);
HybridSettings settings_from_vector(const std::vector<double>& v);

struct FMaximum {
  numerics::OptResult result;
  HybridSettings settings;
};

/// Global maximum of F over the search box by multistart simplex ascent.
FMaximum maximize_locality_objective(const TmsvsParams& params, int starts, std::uint64_t seed,
                                     const numerics::MultistartOptions& options = {},
                                     const numerics::IntegrationConfig& cfg = {});

/// Thrown when the balance equation for kappa has no unique solution.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Solution of kappa<m>_1 + (1-kappa)<M>_1 = kappa<M>_2 + (1-kappa)<m>_2.
double kappa(const MMFunctions& mm);
double kappa(const Behavior& behavior, const numerics::IntegrationConfig& cfg = {});

/// Thrown by build_jpdao for a behavior that violates the locality conditions.
class NotLocalError : public std::runtime_error {
 public:
  NotLocalError(const std::string& what, double violation)
      : std::runtime_error(what), violation_(violation) {}
  double violation() const { return violation_; }

 private:
  double violation_;
};

/**
 * Joint distribution W(x1, x2, n1, n2) = w1(x1,n1,n2) w2(x2,n1,n2) / w(n1,n2),
 * x_i the quadrature at phi_i and n_j the click outcome at gamma_j.
 */
struct FactorizedJpdao {
  double kappa = 0.5;
  std::shared_ptr<const Behavior> behavior;
  std::shared_ptr<const MMFunctions> mm;
  /// w[n1][n2]; cells below 1e-14 make W vanish.
  std::array<std::array<double, 2>, 2> w{};

  double w_i(int i, double x, int n1, int n2) const;
  double w1(double x, int n1, int n2) const { return w_i(1, x, n1, n2); }
  double w2(double x, int n1, int n2) const { return w_i(2, x, n1, n2); }
  double W(double x1, double x2, int n1, int n2) const;
};

FactorizedJpdao build_jpdao(BehaviorPtr behavior, const numerics::IntegrationConfig& cfg = {});

struct MarginalReport {
  double max_density_deviation = 0.0;        ///< pointwise, over the eight slices on the grid
  double max_mass_deviation = 0.0;           ///< integrated slice probabilities
  double max_normalization_deviation = 0.0;  ///< |w(n1,n2) - int w_i|
  double min_component = 0.0;                ///< smallest w_i on the grid
  long grid_points = 0;

  double max_deviation() const;
};

/// Integrates W over the other quadrature and sums over the other click for all eight slices.
MarginalReport jpdao_marginal_check(const FactorizedJpdao& jpdao, const Behavior& behavior,
                                    int grid_points = 61,
                                    const numerics::IntegrationConfig& cfg = {});

using JointFunction = std::function<double(double x1, double x2, int n1, int n2)>;

struct HomogeneousComponents {
  std::vector<double> x1;
  std::vector<double> x2;
  /// Row-major tables over (x1, x2): C, C00, C01, C10.
  std::vector<double> C, C00, C01, C10;
  double max_line_marginal = 0.0;
};

/**
 * Components of H = W - W_p on a tensor quadrature grid; checks that the
 * line integrals of C00, C01, C10 vanish within `tolerance` and throws
 * std::runtime_error naming the component and node otherwise.
 */
HomogeneousComponents homogeneous_components(const JointFunction& full, const JointFunction& wp,
                                             const numerics::QuadratureRule& grid1,
                                             const numerics::QuadratureRule& grid2,
                                             double tolerance = 1e-6);

/// Quadrature rule with `nodes` Gauss-Legendre points over the behavior window of setting i.
numerics::QuadratureRule behavior_grid(const Behavior& behavior, int i, int nodes = 96,
                                       double halfwidth = 8.0);

using Quasiprobability = std::function<double(Complex alpha_a, Complex alpha_b)>;
using AliceSymbol = std::function<double(double x, double phi, Complex alpha)>;
using BobSymbol = std::function<double(int n, Complex gamma, Complex alpha)>;

/// Centre and standard deviation (per real dimension) of a quasiprobability's support.
struct PhaseSpaceBox {
  Complex center{0.0, 0.0};
  double sigma = 1.0;
};

/**
 * Particular solution W_p(x1, x2, n1, n2) as a phase-space integral over a
 * quasiprobability, on a 64-node Gauss-Legendre tensor grid per real
 * dimension spanning +-8 sigma. Bob's side is contracted once at construction.
 */
class ParticularSolution {
 public:
  ParticularSolution(Quasiprobability quasiprob, PhaseSpaceBox box_a, PhaseSpaceBox box_b,
                     HybridSettings settings, AliceSymbol alice = {}, BobSymbol bob = {},
                     int nodes = 64);

  double operator()(double x1, double x2, int n1, int n2) const;

 private:
  struct Node {
    Complex alpha;
    double weight;
  };
  std::vector<Node> alice_nodes_;
  /// Bob-contracted weights G[a][2*n1+n2].
  std::vector<std::array<double, 4>> contracted_;
  HybridSettings settings_;
  AliceSymbol alice_;
};

double particular_solution_wp(const Quasiprobability& quasiprob, PhaseSpaceBox box_a,
                              PhaseSpaceBox box_b, const HybridSettings& settings, double x1,
                              double x2, int n1, int n2);

/// The squeezed vacuum has no regular Glauber-Sudarshan function; always throws std::domain_error.
Quasiprobability tmsvs_glauber_p(const TmsvsParams& params);

/**
 * X1^(k) = {x : P(x,0|phi_k,gamma_1) + P(x,0|phi_k,gamma_2) - P(x|phi_k) >= 0} and
 * X2^(k) = {x : P(x,0|phi_l,gamma_2) >= P(x,0|phi_l,gamma_1)}, l the complement of k.
 */
class PartitionSets {
 public:
  PartitionSets(const Behavior& behavior, int k);

  int k() const { return k_; }
  int l() const { return 3 - k_; }
  /// Alice setting at which set s (1 or 2) is defined.
  int setting_of(int s) const { return s == 1 ? k_ : 3 - k_; }
  bool contains(int s, double x) const;
  /// Set used to dichotomize the quadrature at Alice setting i.
  int set_for_setting(int i) const { return i == k_ ? 1 : 2; }
  /// Boundary points of the set attached to Alice setting i, inside its quadrature window.
  const std::vector<double>& breakpoints(int i) const { return breakpoints_[i - 1]; }

 private:
  double defining(int s, double x) const;

  const Behavior* behavior_;
  int k_;
  std::array<std::vector<double>, 2> breakpoints_;
};

/// lambda(x, n | phi_i, gamma_j); i, j in {1, 2}.
using TestFunction = std::function<double(double x, int n, int i, int j)>;

/**
 * Test function of the generalized CHSH inequality, value + coefficient * I(x; S):
 * for i = k:  -I(x;X1) delta_{n,1} (j = 1),  I(x;X1) delta_{n,0} (j = 2);
 * for i = l:  -I(x;X2) delta_{n,0} (j = 1),  -(1 - I(x;X2)) delta_{n,0} (j = 2).
 * Its Bell functional equals <m>_k - <M>_l and its right-hand side is zero.
 */
double statement1_lambda(int k, double x, int n, int i, int j, const PartitionSets& sets);

/// Literal table with rows fixed at i = 1, 2 and (2,2) entry 1 - I(x;X2) delta_{n,0}.
double statement1_lambda_printed(int k, double x, int n, int i, int j, const PartitionSets& sets);

/// lambda(i, j, n) = constant + coefficient * I(x_i; set); the set is identified by an integer.
struct IndicatorTerm {
  double constant = 0.0;
  double coefficient = 0.0;
  int set = 0;
};

/// terms[i-1][j-1][n].
using IndicatorTable = std::array<std::array<std::array<IndicatorTerm, 2>, 2>, 2>;

IndicatorTable statement1_table(int k);
IndicatorTable statement1_printed_table(int k);

/// Supremum over x and deterministic clicks, enumerating every membership pattern exactly.
double indicator_rhs_supremum(const IndicatorTable& table);

/// Sum over setting pairs of E(lambda | phi_i, gamma_j); jumps of lambda may be passed as breakpoints.
double bell_functional(const TestFunction& lambda, const Behavior& behavior,
                       const numerics::IntegrationConfig& cfg = {},
                       const std::array<std::vector<double>, 2>& breakpoints = {});

/// Bell functional of statement1_lambda, integrated piecewise between the set boundaries.
double statement1_functional(const Behavior& behavior, const PartitionSets& sets,
                             const numerics::IntegrationConfig& cfg = {});

struct Estimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Sample mean of lambda over outcomes recorded at settings (i, j).
Estimate estimate_expectation(const std::vector<Outcome>& outcomes, const TestFunction& lambda,
                              int i, int j);

/// P(A, B | a_i, b_j) with A, B in {0, 1}; stored as p[A][B][i-1][j-1].
struct DiscreteBehavior {
  std::array<std::array<std::array<std::array<double, 2>, 2>, 2>, 2> p{};

  double at(int A, int B, int i, int j) const { return p[A][B][i - 1][j - 1]; }
  /// Throws std::invalid_argument unless each setting pair is normalized within tol.
  void validate(double tol = 1e-9) const;
};

/// Sum_{i,j} E(lambda_mn | a_i, b_j) with lambda_mn = (2 delta_{A,B} - 1)(1 - 2 delta_{a,m} delta_{b,n}).
double chsh_value(const DiscreteBehavior& db, int m, int n);

/// Supremum of the CHSH test function over the 16 deterministic assignments.
double chsh_rhs_supremum(int m, int n);

/// Dichotomized quadrature x~(phi_i) = 1 - I(x; S_i), S_i the set attached to setting i.
DiscreteBehavior dichotomize(const Behavior& behavior, const PartitionSets& sets,
                             const numerics::IntegrationConfig& cfg = {});

/// P~(0,0|k,1) - P~(0,1|k,2) - P~(0,0|l,1) - P~(1,0|l,2).
double dichotomized_inequality(const DiscreteBehavior& db, int k);

void write_jpdao_csv(std::ostream& out, const FactorizedJpdao& jpdao, const Behavior& behavior,
                     int nodes = 32);
void write_discrete_csv(std::ostream& out, const DiscreteBehavior& db);

}  // namespace hybridbell::locality
