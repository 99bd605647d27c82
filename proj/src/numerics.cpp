#include "hybridbell/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include <Eigen/Eigenvalues>

namespace hybridbell::numerics {

namespace {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};

constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208564232067, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};

// Weights of the embedded Gauss rule at the odd Kronrod nodes.
constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double a;
  double b;
  double value;
  double error;

  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment kronrod_segment(const RealFunction& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f_center = f(center);
  double kronrod = f_center * kKronrodWeights[10];
  double gauss = 0.0;
  double abs_sum = std::abs(kronrod);
  std::array<double, 10> f_left{};
  std::array<double, 10> f_right{};
  for (int k = 0; k < 10; ++k) {
    const double dx = half * kKronrodNodes[k];
    f_left[k] = f(center - dx);
    f_right[k] = f(center + dx);
    const double pair = f_left[k] + f_right[k];
    kronrod += kKronrodWeights[k] * pair;
    abs_sum += kKronrodWeights[k] * (std::abs(f_left[k]) + std::abs(f_right[k]));
    if (k % 2 == 1) gauss += kGaussWeights[k / 2] * pair;
  }
  const double mean = 0.5 * kronrod;
  double asc = kKronrodWeights[10] * std::abs(f_center - mean);
  for (int k = 0; k < 10; ++k) {
    asc += kKronrodWeights[k] * (std::abs(f_left[k] - mean) + std::abs(f_right[k] - mean));
  }
  const double result = kronrod * half;
  abs_sum *= std::abs(half);
  asc *= std::abs(half);
  double error = std::abs((kronrod - gauss) * half);
  if (asc != 0.0 && error != 0.0) error = asc * std::min(1.0, std::pow(200.0 * error / asc, 1.5));
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  if (abs_sum > std::numeric_limits<double>::min() / (50.0 * kEps)) {
    error = std::max(50.0 * kEps * abs_sum, error);
  }
  return {a, b, result, error};
}

double tolerance(const IntegrationConfig& cfg, double value) {
  return std::max(cfg.abs_tol, cfg.rel_tol * std::abs(value));
}

IntegrationResult gauss_hermite_integrate(const RealFunction& f, const IntegrationConfig& cfg,
                                          double center, double width) {
  constexpr int kMaxNodes = 256;
  auto apply = [&](int n, long& evals) {
    const QuadratureRule rule = gauss_hermite_rule(n);
    const double scale = std::numbers::sqrt2 * width;
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double t = rule.nodes[k];
      sum += rule.weights[k] * std::exp(t * t) * f(center + scale * t);
      ++evals;
    }
    return sum * scale;
  };
  IntegrationResult out;
  int n = cfg.node_count;
  double previous = apply(n, out.evaluations);
  while (true) {
    const int next = std::min(2 * n, kMaxNodes);
    const double current = apply(next, out.evaluations);
    out.value = current;
    out.error = std::abs(current - previous);
    if (out.error <= tolerance(cfg, current)) return out;
    if (next == kMaxNodes) {
      throw IntegrationError("Gauss-Hermite rule did not converge at " +
                                 std::to_string(kMaxNodes) + " nodes",
                             out.value, out.error);
    }
    previous = current;
    n = next;
  }
}

}  // namespace

void IntegrationConfig::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
    throw std::invalid_argument("integration tolerances must be positive");
  }
  if (node_count < 8) throw std::invalid_argument("node_count must be at least 8");
  if (!(truncation_halfwidth >= 6.0)) {
    throw std::invalid_argument("truncation_halfwidth must be at least 6");
  }
  if (max_subdivisions < 1) throw std::invalid_argument("max_subdivisions must be positive");
}

IntegrationResult integrate_interval(const RealFunction& f, double a, double b,
                                     const IntegrationConfig& cfg) {
  IntegrationResult out;
  if (a == b) return out;
  std::priority_queue<Segment> queue;
  Segment first = kronrod_segment(f, a, b);
  out.evaluations = 21;
  double total = first.value;
  double total_error = first.error;
  queue.push(first);
  int subdivisions = 0;
  while (total_error > tolerance(cfg, total)) {
    if (subdivisions >= cfg.max_subdivisions) {
      throw IntegrationError("adaptive quadrature exhausted " +
                                 std::to_string(cfg.max_subdivisions) + " subdivisions",
                             total, total_error);
    }
    const Segment worst = queue.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Interval cannot be split further in double precision.
      throw IntegrationError("adaptive quadrature reached machine resolution", total,
                             total_error);
    }
    queue.pop();
    const Segment left = kronrod_segment(f, worst.a, mid);
    const Segment right = kronrod_segment(f, mid, worst.b);
    out.evaluations += 42;
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    queue.push(left);
    queue.push(right);
    ++subdivisions;
    if (subdivisions % 64 == 0) {
      // Re-sum to keep the running totals free of cancellation drift.
      total = 0.0;
      total_error = 0.0;
      auto copy = queue;
      while (!copy.empty()) {
        total += copy.top().value;
        total_error += copy.top().error;
        copy.pop();
      }
    }
  }
  out.value = total;
  out.error = total_error;
  return out;
}

IntegrationResult integrate_real_line_detailed(const RealFunction& f,
                                               const IntegrationConfig& cfg, double center,
                                               double width) {
  cfg.validate();
  if (!(width > 0.0)) throw std::invalid_argument("integration width must be positive");
  if (cfg.scheme == QuadratureScheme::kGaussHermite) {
    return gauss_hermite_integrate(f, cfg, center, width);
  }
  const double half = cfg.truncation_halfwidth * width;
  return integrate_interval(f, center - half, center + half, cfg);
}

double integrate_real_line(const RealFunction& f, const IntegrationConfig& cfg, double center,
                           double width) {
  return integrate_real_line_detailed(f, cfg, center, width).value;
}

QuadratureRule gauss_hermite_rule(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Hermite rule needs at least one node");
  // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix of the Hermite recursion.
  Eigen::VectorXd diagonal = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off = Eigen::VectorXd::Zero(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(0.5 * k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diagonal, off, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("Gauss-Hermite eigenvalue problem did not converge");
  }

  // Newton polish on the orthonormal recursion; weights from its derivative
  // keep full relative accuracy in the far tails.
  const double pi_m4 = std::pow(std::numbers::pi, -0.25);
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = solver.eigenvalues()[i];
    double derivative = 0.0;
    for (int iter = 0; iter < 3; ++iter) {
      double p1 = pi_m4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      derivative = std::sqrt(2.0 * n) * p2;
      z -= p1 / derivative;
    }
    rule.nodes[i] = z;
    rule.weights[i] = 2.0 / (derivative * derivative);
  }
  // Exact symmetry.
  for (int i = 0; i < n / 2; ++i) {
    const double node = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    const double weight = 0.5 * (rule.weights[i] + rule.weights[n - 1 - i]);
    rule.nodes[i] = -node;
    rule.nodes[n - 1 - i] = node;
    rule.weights[i] = rule.weights[n - 1 - i] = weight;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

QuadratureRule gauss_legendre_rule(int n) {
  if (n < 1) throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
  QuadratureRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double derivative = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1);
      }
      derivative = n * (z * p1 - p2) / (z * z - 1.0);
      const double step = p1 / derivative;
      z -= step;
      if (std::abs(step) <= 1e-16) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = 2.0 / ((1.0 - z * z) * derivative * derivative);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

void SearchBox::validate() const {
  if (lower.empty() || lower.size() != upper.size()) {
    throw std::invalid_argument("search box bounds must be non-empty and of equal length");
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (!(lower[i] < upper[i])) {
      throw std::invalid_argument("search box requires lower < upper in every coordinate");
    }
  }
}

namespace {

double checked_value(const VectorFunction& f, const std::vector<double>& x, long& evals) {
  ++evals;
  const double v = f(x);
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

void clamp_into(std::vector<double>& x, const SearchBox& box) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], box.lower[i], box.upper[i]);
}

double simplex_diameter(const std::vector<std::vector<double>>& simplex, const SearchBox& box) {
  double diameter = 0.0;
  for (std::size_t v = 1; v < simplex.size(); ++v) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < simplex[v].size(); ++i) {
      // Measured relative to the box extent so that mixed units compare.
      const double d = (simplex[v][i] - simplex[0][i]) / (box.upper[i] - box.lower[i]);
      d2 += d * d;
    }
    diameter = std::max(diameter, std::sqrt(d2));
  }
  return diameter;
}

// One Nelder-Mead run with adaptive coefficients; maximizes f.
OptResult nelder_mead_once(const VectorFunction& f, const std::vector<double>& start,
                           const SearchBox& box, double step_fraction, long budget,
                           double diameter_tol) {
  const std::size_t dim = box.dimension();
  const double n = static_cast<double>(dim);
  const double reflect = 1.0;
  const double expand = 1.0 + 2.0 / n;
  const double contract = 0.75 - 1.0 / (2.0 * n);
  const double shrink = 1.0 - 1.0 / n;

  OptResult out;
  std::vector<std::vector<double>> simplex(dim + 1, start);
  clamp_into(simplex[0], box);
  for (std::size_t i = 0; i < dim; ++i) {
    auto& vertex = simplex[i + 1];
    vertex = simplex[0];
    const double step = step_fraction * (box.upper[i] - box.lower[i]);
    vertex[i] += (vertex[i] + step <= box.upper[i]) ? step : -step;
    clamp_into(vertex, box);
  }
  std::vector<double> values(dim + 1);
  for (std::size_t v = 0; v <= dim; ++v) values[v] = checked_value(f, simplex[v], out.evaluations);

  std::vector<std::size_t> order(dim + 1);
  auto sort_simplex = [&] {
    for (std::size_t i = 0; i <= dim; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    std::vector<std::vector<double>> s(dim + 1);
    std::vector<double> vals(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) {
      s[i] = std::move(simplex[order[i]]);
      vals[i] = values[order[i]];
    }
    simplex = std::move(s);
    values = std::move(vals);
  };

  std::vector<double> centroid(dim);
  auto point_along = [&](double t) {
    std::vector<double> p(dim);
    for (std::size_t i = 0; i < dim; ++i) p[i] = centroid[i] + t * (simplex[dim][i] - centroid[i]);
    clamp_into(p, box);
    return p;
  };

  while (true) {
    sort_simplex();
    if (simplex_diameter(simplex, box) < diameter_tol) {
      out.converged = true;
      break;
    }
    if (out.evaluations >= budget) break;
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t v = 0; v < dim; ++v) {
      for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[v][i] / n;
    }
    const auto reflected = point_along(-reflect);
    const double f_reflected = checked_value(f, reflected, out.evaluations);
    if (f_reflected > values[0]) {
      const auto expanded = point_along(-reflect * expand);
      const double f_expanded = checked_value(f, expanded, out.evaluations);
      if (f_expanded > f_reflected) {
        simplex[dim] = expanded;
        values[dim] = f_expanded;
      } else {
        simplex[dim] = reflected;
        values[dim] = f_reflected;
      }
      continue;
    }
    if (f_reflected > values[dim - 1]) {
      simplex[dim] = reflected;
      values[dim] = f_reflected;
      continue;
    }
    const bool outside = f_reflected > values[dim];
    const auto contracted = point_along(outside ? -reflect * contract : contract);
    const double f_contracted = checked_value(f, contracted, out.evaluations);
    if (f_contracted > std::max(f_reflected, values[dim]) ||
        (!outside && f_contracted > values[dim])) {
      simplex[dim] = contracted;
      values[dim] = f_contracted;
      continue;
    }
    for (std::size_t v = 1; v <= dim; ++v) {
      for (std::size_t i = 0; i < dim; ++i) {
        simplex[v][i] = simplex[0][i] + shrink * (simplex[v][i] - simplex[0][i]);
      }
      values[v] = checked_value(f, simplex[v], out.evaluations);
    }
  }
  out.value = values[0];
  out.argument = simplex[0];
  return out;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::array<int, 16> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

}  // namespace

OptResult nelder_mead_maximize(const VectorFunction& f, const std::vector<double>& start,
                               const SearchBox& box, const NelderMeadOptions& options) {
  box.validate();
  if (start.size() != box.dimension()) {
    throw std::invalid_argument("start point dimension does not match the search box");
  }
  OptResult best = nelder_mead_once(f, start, box, options.initial_step, options.max_evaluations,
                                    options.diameter_tol);
  // Restart from the optimum with a smaller simplex; stops once no progress is made.
  double step = options.initial_step;
  for (int restart = 0; restart < 3 && best.evaluations < options.max_evaluations; ++restart) {
    step *= 0.1;
    OptResult next = nelder_mead_once(f, best.argument, box, step,
                                      options.max_evaluations - best.evaluations,
                                      options.diameter_tol);
    next.evaluations += best.evaluations;
    const bool improved = next.value > best.value + 1e-14 * (1.0 + std::abs(best.value));
    if (next.value > best.value) {
      best.value = next.value;
      best.argument = next.argument;
    }
    best.evaluations = next.evaluations;
    best.converged = next.converged;
    if (!improved) break;
  }
  return best;
}

std::vector<std::vector<double>> low_discrepancy_points(std::size_t count, std::size_t dimension,
                                                        std::uint64_t seed) {
  if (dimension > kPrimes.size()) {
    throw std::invalid_argument("low-discrepancy sequence supports at most 16 dimensions");
  }
  std::uint64_t state = seed;
  std::vector<double> shift(dimension);
  for (auto& s : shift) s = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
  std::vector<std::vector<double>> points(count, std::vector<double>(dimension));
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t d = 0; d < dimension; ++d) {
      double u = radical_inverse(k + 1, kPrimes[d]) + shift[d];
      points[k][d] = u - std::floor(u);
    }
  }
  return points;
}

OptResult maximize_multistart(const VectorFunction& f, const SearchBox& box, int starts,
                              std::uint64_t seed, const MultistartOptions& options) {
  box.validate();
  if (starts < 1) throw std::invalid_argument("multistart needs at least one start");
  const auto unit = low_discrepancy_points(static_cast<std::size_t>(starts), box.dimension(), seed);
  OptResult best;
  best.value = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  bool all_converged = true;
  long evaluations = 0;
  if (options.local_results != nullptr) options.local_results->clear();
  for (const auto& u : unit) {
    std::vector<double> start(box.dimension());
    for (std::size_t i = 0; i < start.size(); ++i) {
      start[i] = box.lower[i] + u[i] * (box.upper[i] - box.lower[i]);
    }
    OptResult local = nelder_mead_maximize(f, start, box, options.local);
    evaluations += local.evaluations;
    all_converged = all_converged && local.converged;
    if (!have_best || local.value > best.value) {
      best = local;
      have_best = true;
    }
    if (options.local_results != nullptr) options.local_results->push_back(std::move(local));
  }
  best.evaluations = evaluations;
  best.converged = all_converged;
  return best;
}

OptResult supremum_over_plane(const PlaneFunction& f, std::complex<double> centroid,
                              double radius, int starts, std::uint64_t seed,
                              const MultistartOptions& options) {
  if (!(radius > 0.0)) throw std::invalid_argument("supremum radius must be positive");
  SearchBox box{{centroid.real() - radius, centroid.imag() - radius},
                {centroid.real() + radius, centroid.imag() + radius}};
  auto g = [&f](const std::vector<double>& v) { return f({v[0], v[1]}); };
  return maximize_multistart(g, box, starts, seed, options);
}

}  // namespace hybridbell::numerics
