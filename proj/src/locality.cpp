#include "hybridbell/locality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "hybridbell/format.hpp"

namespace hybridbell::locality {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kCellFloor = 1e-14;
constexpr double kDegenerateBalance = 1e-12;
constexpr double kLocalTolerance = 1e-10;

double m_of(const Behavior& b, double x, int i) {
  return std::max(b.pdf(x, 0, i, 1) + b.pdf(x, 0, i, 2) - b.marginal_x(x, i), 0.0);
}

double M_of(const Behavior& b, double x, int i) {
  return std::min(b.pdf(x, 0, i, 1), b.pdf(x, 0, i, 2));
}

double integrate_pieces(const numerics::RealFunction& f, const Behavior& b, int i,
                        const numerics::IntegrationConfig& cfg, const std::vector<double>& cuts) {
  if (cuts.empty()) return b.integrate_x(f, i, cfg);
  const QuadratureWindow w = b.window(i);
  const double lo = w.center - cfg.truncation_halfwidth * w.width;
  const double hi = w.center + cfg.truncation_halfwidth * w.width;
  std::vector<double> edges{lo};
  for (double c : cuts) {
    if (c > lo && c < hi) edges.push_back(c);
  }
  edges.push_back(hi);
  std::sort(edges.begin(), edges.end());
  double total = 0.0;
  for (std::size_t k = 1; k < edges.size(); ++k) {
    total += numerics::integrate_interval(f, edges[k - 1], edges[k], cfg).value;
  }
  return total;
}

/// Sign changes of g(x) >= 0 on [lo, hi], located by a uniform scan and refined by bisection.
std::vector<double> sign_changes(const numerics::RealFunction& g, double lo, double hi, int scan) {
  std::vector<double> out;
  const double step = (hi - lo) / (scan - 1);
  bool prev_in = g(lo) >= 0.0;
  double prev_x = lo;
  for (int p = 1; p < scan; ++p) {
    const double x = lo + step * p;
    const bool in = g(x) >= 0.0;
    if (in != prev_in) {
      double a = prev_x;
      double b = x;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        if ((g(mid) >= 0.0) == prev_in) {
          a = mid;
        } else {
          b = mid;
        }
      }
      out.push_back(b);
    }
    prev_in = in;
    prev_x = x;
  }
  return out;
}

/// Support edges of m at setting i.
std::vector<double> m_edges(const Behavior& b, int i, int scan) {
  const QuadratureWindow w = b.window(i);
  return sign_changes(
      [&](double x) { return b.pdf(x, 0, i, 1) + b.pdf(x, 0, i, 2) - b.marginal_x(x, i); },
      w.center - 8.0 * w.width, w.center + 8.0 * w.width, scan);
}

/// Crossings of the two no-click densities at setting i, where M has kinks.
std::vector<double> M_kinks(const Behavior& b, int i, int scan) {
  const QuadratureWindow w = b.window(i);
  return sign_changes([&](double x) { return b.pdf(x, 0, i, 1) - b.pdf(x, 0, i, 2); },
                      w.center - 8.0 * w.width, w.center + 8.0 * w.width, scan);
}

std::vector<double> mm_kinks(const Behavior& b, int i, int scan) {
  std::vector<double> out = m_edges(b, i, scan);
  const std::vector<double> cross = M_kinks(b, i, scan);
  out.insert(out.end(), cross.begin(), cross.end());
  std::sort(out.begin(), out.end());
  return out;
}

constexpr int kKinkScan = 801;

}  // namespace

// --- m and M ---

MMFunctions::MMFunctions(const Behavior& behavior, const numerics::IntegrationConfig& cfg)
    : behavior_(&behavior) {
  for (int i = 1; i <= 2; ++i) {
    kinks_[i - 1] = mm_kinks(behavior, i, kKinkScan);
    mean_m_[i - 1] = integrate_pieces([&](double x) { return m_of(behavior, x, i); }, behavior, i,
                                      cfg, kinks_[i - 1]);
    mean_M_[i - 1] = integrate_pieces([&](double x) { return M_of(behavior, x, i); }, behavior, i,
                                      cfg, kinks_[i - 1]);
  }
}

double MMFunctions::m(double x, int i) const { return m_of(*behavior_, x, i); }
double MMFunctions::M(double x, int i) const { return M_of(*behavior_, x, i); }

double MMFunctions::mean_m(int i) const {
  check_setting_index(i, "quadrature setting");
  return mean_m_[i - 1];
}

const std::vector<double>& MMFunctions::kinks(int i) const {
  check_setting_index(i, "quadrature setting");
  return kinks_[i - 1];
}

double MMFunctions::mean_M(int i) const {
  check_setting_index(i, "quadrature setting");
  return mean_M_[i - 1];
}

MMFunctions mm_functions(const Behavior& behavior, const numerics::IntegrationConfig& cfg) {
  return MMFunctions(behavior, cfg);
}

LocalityMargins locality_margins(const MMFunctions& mm) {
  return {mm.mean_m(1) - mm.mean_M(2), mm.mean_m(2) - mm.mean_M(1)};
}

double locality_violation(const Behavior& behavior, const numerics::IntegrationConfig& cfg) {
  return locality_margins(MMFunctions(behavior, cfg)).violation();
}

// --- global optimization of F ---

double locality_objective_F(const HybridSettings& settings, const TmsvsParams& params,
                            const numerics::IntegrationConfig& cfg) {
  const TmsvsBehavior b(params, settings.wrapped());
  const double mean_m1 =
      integrate_pieces([&](double x) { return m_of(b, x, 1); }, b, 1, cfg, m_edges(b, 1, kKinkScan));
  const double mean_M2 =
      integrate_pieces([&](double x) { return M_of(b, x, 2); }, b, 2, cfg, M_kinks(b, 2, kKinkScan));
  return mean_m1 - mean_M2;
}

numerics::SearchBox locality_search_box(double gamma_bound) {
  const double g = gamma_bound;
  return {{0.0, 0.0, -g, -g, -g, -g}, {kTwoPi, kTwoPi, g, g, g, g}};
}

HybridSettings settings_from_vector(const std::vector<double>& v) {
  if (v.size() != 6) throw std::invalid_argument("settings vector must have 6 entries");
  HybridSettings s;
  s.phi = {v[0], v[1]};
  s.gamma = {Complex(v[2], v[3]), Complex(v[4], v[5])};
  return s.wrapped();
}

FMaximum maximize_locality_objective(const TmsvsParams& params, int starts, std::uint64_t seed,
                                     const numerics::MultistartOptions& options,
                                     const numerics::IntegrationConfig& cfg) {
  params.validate();
  auto objective = [&](const std::vector<double>& v) {
    return locality_objective_F(settings_from_vector(v), params, cfg);
  };
  FMaximum out;
  out.result = numerics::maximize_multistart(objective, locality_search_box(), starts, seed, options);
  out.settings = settings_from_vector(out.result.argument);
  return out;
}

// --- kappa and the JPDAO ---

double kappa(const MMFunctions& mm) {
  const double num = mm.mean_M(2) - mm.mean_m(1);
  const double den = mm.mean_M(1) - mm.mean_m(2);
  if (std::abs(num) < kDegenerateBalance && std::abs(den) < kDegenerateBalance) return 0.5;
  if (std::abs(den) < kDegenerateBalance) {
    throw DegeneracyError("kappa undefined: <M>_1 - <m>_2 vanishes while <M>_2 - <m>_1 = " +
                          format_double(num));
  }
  if (den + num == 0.0) throw DegeneracyError("kappa undefined: balance terms cancel");
  return den / (den + num);
}

double kappa(const Behavior& behavior, const numerics::IntegrationConfig& cfg) {
  return kappa(MMFunctions(behavior, cfg));
}

double FactorizedJpdao::w_i(int i, double x, int n1, int n2) const {
  check_setting_index(i, "quadrature setting");
  if ((n1 != 0 && n1 != 1) || (n2 != 0 && n2 != 1)) {
    throw std::out_of_range("click outcomes must be 0 or 1");
  }
  const double w00 = i == 1 ? kappa * mm->m(x, 1) + (1.0 - kappa) * mm->M(x, 1)
                            : kappa * mm->M(x, 2) + (1.0 - kappa) * mm->m(x, 2);
  if (n1 == 0 && n2 == 0) return w00;
  const Behavior& b = *behavior;
  if (n1 == 1 && n2 == 0) return b.pdf(x, 0, i, 2) - w00;
  if (n1 == 0 && n2 == 1) return b.pdf(x, 0, i, 1) - w00;
  return b.marginal_x(x, i) - b.pdf(x, 0, i, 1) - b.pdf(x, 0, i, 2) + w00;
}

double FactorizedJpdao::W(double x1, double x2, int n1, int n2) const {
  const double cell = w.at(n1).at(n2);
  if (cell < kCellFloor) return 0.0;
  return w_i(1, x1, n1, n2) * w_i(2, x2, n1, n2) / cell;
}

FactorizedJpdao build_jpdao(BehaviorPtr behavior, const numerics::IntegrationConfig& cfg) {
  if (!behavior) throw std::invalid_argument("build_jpdao needs a behavior");
  FactorizedJpdao out;
  out.behavior = behavior;
  out.mm = std::make_shared<MMFunctions>(*behavior, cfg);
  const double v = locality_margins(*out.mm).violation();
  if (v > kLocalTolerance) {
    throw NotLocalError("behavior is not local: V = " + format_double(v), v);
  }
  out.kappa = kappa(*out.mm);
  for (int n1 = 0; n1 <= 1; ++n1) {
    for (int n2 = 0; n2 <= 1; ++n2) {
      out.w[n1][n2] = integrate_pieces([&](double x) { return out.w_i(1, x, n1, n2); }, *behavior,
                                       1, cfg, out.mm->kinks(1));
    }
  }
  return out;
}

double MarginalReport::max_deviation() const {
  return std::max({max_density_deviation, max_mass_deviation, max_normalization_deviation});
}

MarginalReport jpdao_marginal_check(const FactorizedJpdao& jpdao, const Behavior& behavior,
                                    int grid_points, const numerics::IntegrationConfig& cfg) {
  if (grid_points < 2) throw std::invalid_argument("marginal check needs at least two grid points");
  MarginalReport report;
  report.min_component = std::numeric_limits<double>::infinity();

  // Integrated components int w_i(x, n1, n2) dx.
  std::array<std::array<std::array<double, 2>, 2>, 2> mass{};
  for (int i = 1; i <= 2; ++i) {
    for (int n1 = 0; n1 <= 1; ++n1) {
      for (int n2 = 0; n2 <= 1; ++n2) {
        mass[i - 1][n1][n2] = integrate_pieces([&](double x) { return jpdao.w_i(i, x, n1, n2); },
                                               behavior, i, cfg, jpdao.mm->kinks(i));
        report.max_normalization_deviation = std::max(
            report.max_normalization_deviation, std::abs(jpdao.w[n1][n2] - mass[i - 1][n1][n2]));
      }
    }
  }

  for (int i = 1; i <= 2; ++i) {
    const int other = 3 - i;
    const QuadratureWindow win = behavior.window(i);
    for (int k = 0; k < grid_points; ++k) {
      const double x = win.center - 6.0 * win.width + 12.0 * win.width * k / (grid_points - 1);
      ++report.grid_points;
      for (int n1 = 0; n1 <= 1; ++n1) {
        for (int n2 = 0; n2 <= 1; ++n2) {
          report.min_component = std::min(report.min_component, jpdao.w_i(i, x, n1, n2));
        }
      }
      for (int j = 1; j <= 2; ++j) {
        for (int n = 0; n <= 1; ++n) {
          double slice = 0.0;
          for (int n1 = 0; n1 <= 1; ++n1) {
            for (int n2 = 0; n2 <= 1; ++n2) {
              if ((j == 1 ? n1 : n2) != n) continue;
              slice += integrate_pieces(
                  [&](double y) {
                    return i == 1 ? jpdao.W(x, y, n1, n2) : jpdao.W(y, x, n1, n2);
                  },
                  behavior, other, cfg, jpdao.mm->kinks(other));
            }
          }
          report.max_density_deviation =
              std::max(report.max_density_deviation, std::abs(slice - behavior.pdf(x, n, i, j)));
        }
      }
    }
  }

  for (int i = 1; i <= 2; ++i) {
    for (int j = 1; j <= 2; ++j) {
      for (int n = 0; n <= 1; ++n) {
        double slice_mass = 0.0;
        for (int n1 = 0; n1 <= 1; ++n1) {
          for (int n2 = 0; n2 <= 1; ++n2) {
            if ((j == 1 ? n1 : n2) != n || jpdao.w[n1][n2] < kCellFloor) continue;
            slice_mass += mass[0][n1][n2] * mass[1][n1][n2] / jpdao.w[n1][n2];
          }
        }
        const double target =
            behavior.integrate_x([&](double x) { return behavior.pdf(x, n, i, j); }, i, cfg);
        report.max_mass_deviation = std::max(report.max_mass_deviation, std::abs(slice_mass - target));
      }
    }
  }
  return report;
}

// --- homogeneous / particular decomposition ---

numerics::QuadratureRule behavior_grid(const Behavior& behavior, int i, int nodes,
                                       double halfwidth) {
  const QuadratureWindow w = behavior.window(i);
  numerics::QuadratureRule rule = numerics::gauss_legendre_rule(nodes);
  const double half = halfwidth * w.width;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    rule.nodes[k] = w.center + half * rule.nodes[k];
    rule.weights[k] *= half;
  }
  return rule;
}

HomogeneousComponents homogeneous_components(const JointFunction& full, const JointFunction& wp,
                                             const numerics::QuadratureRule& grid1,
                                             const numerics::QuadratureRule& grid2,
                                             double tolerance) {
  HomogeneousComponents out;
  out.x1 = grid1.nodes;
  out.x2 = grid2.nodes;
  const std::size_t n1 = grid1.nodes.size();
  const std::size_t n2 = grid2.nodes.size();
  out.C.assign(n1 * n2, 0.0);
  out.C00 = out.C01 = out.C10 = out.C;
  for (std::size_t a = 0; a < n1; ++a) {
    for (std::size_t b = 0; b < n2; ++b) {
      const double x1 = grid1.nodes[a];
      const double x2 = grid2.nodes[b];
      auto H = [&](int c1, int c2) { return full(x1, x2, c1, c2) - wp(x1, x2, c1, c2); };
      const std::size_t idx = a * n2 + b;
      const double c = H(1, 1);
      out.C[idx] = c;
      out.C00[idx] = H(0, 0) - c;
      out.C01[idx] = H(0, 1) + c;
      out.C10[idx] = H(1, 0) + c;
    }
  }

  const std::array<std::pair<const char*, const std::vector<double>*>, 3> named = {
      {{"C00", &out.C00}, {"C01", &out.C01}, {"C10", &out.C10}}};
  for (const auto& [name, table] : named) {
    for (std::size_t a = 0; a < n1; ++a) {
      double line = 0.0;
      for (std::size_t b = 0; b < n2; ++b) line += grid2.weights[b] * (*table)[a * n2 + b];
      out.max_line_marginal = std::max(out.max_line_marginal, std::abs(line));
      if (std::abs(line) > tolerance) {
        throw std::runtime_error(std::string(name) + ": integral over x2 is " + format_double(line) +
                                 " at x1 node " + std::to_string(a));
      }
    }
    for (std::size_t b = 0; b < n2; ++b) {
      double line = 0.0;
      for (std::size_t a = 0; a < n1; ++a) line += grid1.weights[a] * (*table)[a * n2 + b];
      out.max_line_marginal = std::max(out.max_line_marginal, std::abs(line));
      if (std::abs(line) > tolerance) {
        throw std::runtime_error(std::string(name) + ": integral over x1 is " + format_double(line) +
                                 " at x2 node " + std::to_string(b));
      }
    }
  }
  return out;
}

ParticularSolution::ParticularSolution(Quasiprobability quasiprob, PhaseSpaceBox box_a,
                                       PhaseSpaceBox box_b, HybridSettings settings,
                                       AliceSymbol alice, BobSymbol bob, int nodes)
    : settings_(std::move(settings)), alice_(std::move(alice)) {
  if (!quasiprob) throw std::invalid_argument("particular solution needs a quasiprobability");
  if (!(box_a.sigma > 0.0) || !(box_b.sigma > 0.0)) {
    throw std::invalid_argument("phase-space boxes need a positive width");
  }
  settings_.validate();
  if (!bob) bob = [](int n, Complex g, Complex a) { return phase_space::uhd_symbol(n, g, a); };

  const numerics::QuadratureRule rule = numerics::gauss_legendre_rule(nodes);
  auto tensor_nodes = [&](const PhaseSpaceBox& box) {
    std::vector<Node> out;
    const double half = 8.0 * box.sigma;
    for (std::size_t p = 0; p < rule.nodes.size(); ++p) {
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        out.push_back({box.center + Complex(half * rule.nodes[p], half * rule.nodes[q]),
                       rule.weights[p] * rule.weights[q] * half * half});
      }
    }
    return out;
  };
  alice_nodes_ = tensor_nodes(box_a);
  const std::vector<Node> bob_nodes = tensor_nodes(box_b);

  std::vector<std::array<double, 4>> bob_symbols(bob_nodes.size());
  for (std::size_t b = 0; b < bob_nodes.size(); ++b) {
    for (int c1 = 0; c1 <= 1; ++c1) {
      for (int c2 = 0; c2 <= 1; ++c2) {
        bob_symbols[b][2 * c1 + c2] = bob(c1, settings_.gamma[0], bob_nodes[b].alpha) *
                                      bob(c2, settings_.gamma[1], bob_nodes[b].alpha);
      }
    }
  }
  contracted_.assign(alice_nodes_.size(), {0.0, 0.0, 0.0, 0.0});
  for (std::size_t a = 0; a < alice_nodes_.size(); ++a) {
    std::array<double, 4>& g = contracted_[a];
    for (std::size_t b = 0; b < bob_nodes.size(); ++b) {
      const double weight = bob_nodes[b].weight * quasiprob(alice_nodes_[a].alpha, bob_nodes[b].alpha);
      if (weight == 0.0) continue;
      for (int c = 0; c < 4; ++c) g[c] += weight * bob_symbols[b][c];
    }
    for (double& v : g) v *= alice_nodes_[a].weight;
  }
}

double ParticularSolution::operator()(double x1, double x2, int n1, int n2) const {
  if ((n1 != 0 && n1 != 1) || (n2 != 0 && n2 != 1)) {
    throw std::out_of_range("click outcomes must be 0 or 1");
  }
  const int cell = 2 * n1 + n2;
  double total = 0.0;
  if (alice_) {
    for (std::size_t a = 0; a < alice_nodes_.size(); ++a) {
      const Complex alpha = alice_nodes_[a].alpha;
      total += contracted_[a][cell] * alice_(x1, settings_.phi[0], alpha) *
               alice_(x2, settings_.phi[1], alpha);
    }
    return total;
  }
  // Q symbols of balanced homodyne detection, evaluated inline.
  const Complex r1 = std::polar(1.0, -settings_.phi[0]);
  const Complex r2 = std::polar(1.0, -settings_.phi[1]);
  for (std::size_t a = 0; a < alice_nodes_.size(); ++a) {
    const Complex alpha = alice_nodes_[a].alpha;
    const double d1 = x1 - std::numbers::sqrt2 * (alpha * r1).real();
    const double d2 = x2 - std::numbers::sqrt2 * (alpha * r2).real();
    total += contracted_[a][cell] * std::exp(-d1 * d1 - d2 * d2);
  }
  return total / std::numbers::pi;
}

double particular_solution_wp(const Quasiprobability& quasiprob, PhaseSpaceBox box_a,
                              PhaseSpaceBox box_b, const HybridSettings& settings, double x1,
                              double x2, int n1, int n2) {
  return ParticularSolution(quasiprob, box_a, box_b, settings)(x1, x2, n1, n2);
}

Quasiprobability tmsvs_glauber_p(const TmsvsParams& params) {
  params.validate();
  throw std::domain_error(
      "the two-mode squeezed vacuum has no regular Glauber-Sudarshan function; "
      "the particular solution with Q symbols is not available for it");
}

// --- partition sets and the generalized CHSH test function ---

PartitionSets::PartitionSets(const Behavior& behavior, int k) : behavior_(&behavior), k_(k) {
  check_setting_index(k, "partition index k");
  for (int i = 1; i <= 2; ++i) {
    const int s = set_for_setting(i);
    const QuadratureWindow w = behavior.window(i);
    breakpoints_[i - 1] = sign_changes([&](double x) { return defining(s, x); },
                                       w.center - 8.0 * w.width, w.center + 8.0 * w.width, 4001);
  }
}

double PartitionSets::defining(int s, double x) const {
  const Behavior& b = *behavior_;
  if (s == 1) return b.pdf(x, 0, k_, 1) + b.pdf(x, 0, k_, 2) - b.marginal_x(x, k_);
  if (s == 2) return b.pdf(x, 0, l(), 2) - b.pdf(x, 0, l(), 1);
  throw std::out_of_range("partition set index must be 1 or 2");
}

bool PartitionSets::contains(int s, double x) const { return defining(s, x) >= 0.0; }

IndicatorTable statement1_table(int k) {
  check_setting_index(k, "partition index k");
  const int l = 3 - k;
  IndicatorTable t{};
  // Rows of setting k use X1, rows of setting l use X2.
  t[k - 1][0][1] = {0.0, -1.0, 1};
  t[k - 1][1][0] = {0.0, 1.0, 1};
  t[l - 1][0][0] = {0.0, -1.0, 2};
  t[l - 1][1][0] = {-1.0, 1.0, 2};
  return t;
}

IndicatorTable statement1_printed_table(int k) {
  check_setting_index(k, "partition index k");
  IndicatorTable t{};
  t[0][0][1] = {0.0, -1.0, 1};
  t[0][1][0] = {0.0, 1.0, 1};
  t[1][0][0] = {0.0, -1.0, 1};
  t[1][1][0] = {1.0, -1.0, 2};
  t[1][1][1] = {1.0, 0.0, 2};
  return t;
}

namespace {

double evaluate_table(const IndicatorTable& t, double x, int n, int i, int j,
                      const PartitionSets& sets) {
  if (n != 0 && n != 1) throw std::out_of_range("click outcome must be 0 or 1");
  check_setting_index(i, "quadrature setting");
  check_setting_index(j, "displacement setting");
  const IndicatorTerm& term = t[i - 1][j - 1][n];
  if (term.coefficient == 0.0) return term.constant;
  return term.constant + (sets.contains(term.set, x) ? term.coefficient : 0.0);
}

}  // namespace

double statement1_lambda(int k, double x, int n, int i, int j, const PartitionSets& sets) {
  if (sets.k() != k) throw std::invalid_argument("partition sets were built for another k");
  return evaluate_table(statement1_table(k), x, n, i, j, sets);
}

double statement1_lambda_printed(int k, double x, int n, int i, int j, const PartitionSets& sets) {
  if (sets.k() != k) throw std::invalid_argument("partition sets were built for another k");
  return evaluate_table(statement1_printed_table(k), x, n, i, j, sets);
}

double indicator_rhs_supremum(const IndicatorTable& table) {
  // Membership bits, one per distinct (setting, set) pair referenced by the table.
  std::vector<std::pair<int, int>> bits;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      for (int n = 0; n < 2; ++n) {
        const IndicatorTerm& term = table[i][j][n];
        if (term.coefficient == 0.0) continue;
        const std::pair<int, int> key{i, term.set};
        if (std::find(bits.begin(), bits.end(), key) == bits.end()) bits.push_back(key);
      }
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  const unsigned patterns = 1u << bits.size();
  for (unsigned pattern = 0; pattern < patterns; ++pattern) {
    for (int n1 = 0; n1 <= 1; ++n1) {
      for (int n2 = 0; n2 <= 1; ++n2) {
        double total = 0.0;
        for (int i = 0; i < 2; ++i) {
          for (int j = 0; j < 2; ++j) {
            const IndicatorTerm& term = table[i][j][j == 0 ? n1 : n2];
            double member = 0.0;
            if (term.coefficient != 0.0) {
              const auto pos = std::find(bits.begin(), bits.end(), std::pair<int, int>{i, term.set});
              member = (pattern >> (pos - bits.begin())) & 1u ? 1.0 : 0.0;
            }
            total += term.constant + term.coefficient * member;
          }
        }
        best = std::max(best, total);
      }
    }
  }
  return best;
}

double bell_functional(const TestFunction& lambda, const Behavior& behavior,
                       const numerics::IntegrationConfig& cfg,
                       const std::array<std::vector<double>, 2>& breakpoints) {
  double total = 0.0;
  for (int i = 1; i <= 2; ++i) {
    for (int j = 1; j <= 2; ++j) {
      auto integrand = [&](double x) {
        return lambda(x, 0, i, j) * behavior.pdf(x, 0, i, j) +
               lambda(x, 1, i, j) * behavior.pdf(x, 1, i, j);
      };
      total += integrate_pieces(integrand, behavior, i, cfg, breakpoints[i - 1]);
    }
  }
  return total;
}

double statement1_functional(const Behavior& behavior, const PartitionSets& sets,
                             const numerics::IntegrationConfig& cfg) {
  const int k = sets.k();
  return bell_functional(
      [&](double x, int n, int i, int j) { return statement1_lambda(k, x, n, i, j, sets); },
      behavior, cfg, {sets.breakpoints(1), sets.breakpoints(2)});
}

Estimate estimate_expectation(const std::vector<Outcome>& outcomes, const TestFunction& lambda,
                              int i, int j) {
  if (outcomes.size() < 2) throw std::invalid_argument("estimate needs at least two outcomes");
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t count = 0;
  for (const Outcome& o : outcomes) {
    const double v = lambda(o.x, o.n, i, j);
    ++count;
    const double delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(count - 1);
  return {mean, std::sqrt(var / static_cast<double>(count))};
}

// --- CHSH machinery ---

void DiscreteBehavior::validate(double tol) const {
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double total = 0.0;
      for (int A = 0; A < 2; ++A) {
        for (int B = 0; B < 2; ++B) {
          if (!(p[A][B][i][j] >= -tol)) throw std::invalid_argument("negative discrete probability");
          total += p[A][B][i][j];
        }
      }
      if (std::abs(total - 1.0) > tol) {
        throw std::invalid_argument("discrete behavior is not normalized for setting pair (" +
                                    std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
      }
    }
  }
}

double chsh_value(const DiscreteBehavior& db, int m, int n) {
  check_setting_index(m, "CHSH index m");
  check_setting_index(n, "CHSH index n");
  double total = 0.0;
  for (int i = 1; i <= 2; ++i) {
    for (int j = 1; j <= 2; ++j) {
      const double sign = (i == m && j == n) ? -1.0 : 1.0;
      const double same = db.at(0, 0, i, j) + db.at(1, 1, i, j);
      const double different = db.at(0, 1, i, j) + db.at(1, 0, i, j);
      total += sign * (same - different);
    }
  }
  return total;
}

double chsh_rhs_supremum(int m, int n) {
  check_setting_index(m, "CHSH index m");
  check_setting_index(n, "CHSH index n");
  double best = -std::numeric_limits<double>::infinity();
  for (int bits = 0; bits < 16; ++bits) {
    const std::array<int, 2> A = {bits & 1, (bits >> 1) & 1};
    const std::array<int, 2> B = {(bits >> 2) & 1, (bits >> 3) & 1};
    double total = 0.0;
    for (int i = 1; i <= 2; ++i) {
      for (int j = 1; j <= 2; ++j) {
        const double agree = A[i - 1] == B[j - 1] ? 1.0 : -1.0;
        total += agree * ((i == m && j == n) ? -1.0 : 1.0);
      }
    }
    best = std::max(best, total);
  }
  return best;
}

DiscreteBehavior dichotomize(const Behavior& behavior, const PartitionSets& sets,
                             const numerics::IntegrationConfig& cfg) {
  DiscreteBehavior db;
  for (int i = 1; i <= 2; ++i) {
    const int s = sets.set_for_setting(i);
    for (int j = 1; j <= 2; ++j) {
      for (int n = 0; n <= 1; ++n) {
        const double inside = integrate_pieces(
            [&](double x) { return sets.contains(s, x) ? behavior.pdf(x, n, i, j) : 0.0; },
            behavior, i, cfg, sets.breakpoints(i));
        const double outside = integrate_pieces(
            [&](double x) { return sets.contains(s, x) ? 0.0 : behavior.pdf(x, n, i, j); },
            behavior, i, cfg, sets.breakpoints(i));
        // x~ = 0 inside the set, 1 outside.
        db.p[0][n][i - 1][j - 1] = inside;
        db.p[1][n][i - 1][j - 1] = outside;
      }
    }
  }
  return db;
}

double dichotomized_inequality(const DiscreteBehavior& db, int k) {
  check_setting_index(k, "partition index k");
  const int l = 3 - k;
  return db.at(0, 0, k, 1) - db.at(0, 1, k, 2) - db.at(0, 0, l, 1) - db.at(1, 0, l, 2);
}

// --- dumps ---

void write_jpdao_csv(std::ostream& out, const FactorizedJpdao& jpdao, const Behavior& behavior,
                     int nodes) {
  const numerics::QuadratureRule g1 = behavior_grid(behavior, 1, nodes);
  const numerics::QuadratureRule g2 = behavior_grid(behavior, 2, nodes);
  out << "x1,x2,n1,n2,w\n";
  for (double x1 : g1.nodes) {
    for (double x2 : g2.nodes) {
      for (int n1 = 0; n1 <= 1; ++n1) {
        for (int n2 = 0; n2 <= 1; ++n2) {
          out << format_double(x1) << ',' << format_double(x2) << ',' << n1 << ',' << n2 << ','
              << format_double(jpdao.W(x1, x2, n1, n2)) << '\n';
        }
      }
    }
  }
}

void write_discrete_csv(std::ostream& out, const DiscreteBehavior& db) {
  out << "A,B,i,j,p\n";
  for (int i = 1; i <= 2; ++i) {
    for (int j = 1; j <= 2; ++j) {
      for (int A = 0; A <= 1; ++A) {
        for (int B = 0; B <= 1; ++B) {
          out << A << ',' << B << ',' << i << ',' << j << ',' << format_double(db.at(A, B, i, j))
              << '\n';
        }
      }
    }
  }
}

}  // namespace hybridbell::locality
