#include "hybridbell/nonclassicality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "hybridbell/format.hpp"
#include "hybridbell/phase_space.hpp"

namespace hybridbell::nonclassicality {

namespace {

constexpr double kMatchTol = 1e-12;

double wrap_phase(double phi) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(phi, two_pi);
  if (w < 0.0) w += two_pi;
  return w;
}

double search_radius(const NcTestConfig& cfg) {
  return std::max(6.0, 3.0 * std::abs(cfg.gamma1 - cfg.gamma2));
}

Complex search_center(const NcTestConfig& cfg) { return {0.5 * (cfg.gamma1 + cfg.gamma2), 0.0}; }

/// Alice setting index whose phase equals phi0.
int matching_setting(const Behavior& behavior, const NcTestConfig& cfg) {
  const HybridSettings& s = behavior.settings();
  const Complex g1(cfg.gamma1, 0.0);
  const Complex g2(cfg.gamma2, 0.0);
  if (std::abs(s.gamma[0] - g1) > kMatchTol || std::abs(s.gamma[1] - g2) > kMatchTol) {
    throw std::invalid_argument("test displacements (" + format_double(cfg.gamma1) + ", " +
                                format_double(cfg.gamma2) +
                                ") do not match the behavior's settings");
  }
  for (int i = 1; i <= 2; ++i) {
    const double d = std::abs(wrap_phase(s.phi[i - 1]) - wrap_phase(cfg.phi0));
    if (d < kMatchTol || std::abs(d - 2.0 * std::numbers::pi) < kMatchTol) return i;
  }
  throw std::invalid_argument("phase phi0 = " + format_double(cfg.phi0) +
                              " is not one of the behavior's quadrature phases");
}

}  // namespace

void NcTestConfig::validate() const {
  if (!std::isfinite(x0) || !std::isfinite(alpha0) || !std::isfinite(phi0) ||
      !std::isfinite(gamma1) || !std::isfinite(gamma2)) {
    throw std::invalid_argument("nonclassicality test parameters must be finite");
  }
  if (gamma1 == gamma2) throw std::invalid_argument("gamma1 and gamma2 must differ");
}

double chi(int which, const NcTestConfig& cfg) {
  check_setting_index(which, "displacement index");
  if (which == 1) {
    const double d = cfg.alpha0 - cfg.gamma2;
    return -d * std::exp(-d * d);
  }
  const double d = cfg.alpha0 - cfg.gamma1;
  return d * std::exp(-d * d);
}

double chi_weighted_noclick(const NcTestConfig& cfg, Complex alpha) {
  return chi(1, cfg) * phase_space::uhd_symbol(0, cfg.gamma1, alpha) +
         chi(2, cfg) * phase_space::uhd_symbol(0, cfg.gamma2, alpha);
}

DResult constant_D_detailed(const NcTestConfig& cfg, int starts, std::uint64_t seed) {
  cfg.validate();
  DResult out;
  numerics::MultistartOptions options;
  options.local_results = &out.probes;
  const numerics::OptResult best = numerics::supremum_over_plane(
      [&](Complex a) { return chi_weighted_noclick(cfg, a); }, search_center(cfg),
      search_radius(cfg), starts, seed, options);
  // Only the winning start has to converge; flat far-field starts may stall harmlessly.
  const auto winner = std::find_if(out.probes.begin(), out.probes.end(), [&](const auto& p) {
    return p.value == best.value && p.argument == best.argument;
  });
  if (winner == out.probes.end() || !winner->converged) {
    throw NonConvergenceError("supremum defining D did not converge; best estimate " +
                                  format_double(best.value),
                              best.value);
  }
  out.D = std::max(best.value, 0.0);
  out.argmax = {best.argument[0], best.argument[1]};
  return out;
}

double constant_D(const NcTestConfig& cfg) { return constant_D_detailed(cfg).D; }

NcSides nc_sides(const Behavior& behavior, const NcTestConfig& cfg, double D) {
  cfg.validate();
  const int i = matching_setting(behavior, cfg);
  NcSides out;
  out.D = D;
  out.lhs = chi(1, cfg) * behavior.pdf(cfg.x0, 0, i, 1) + chi(2, cfg) * behavior.pdf(cfg.x0, 0, i, 2);
  out.rhs = D * behavior.marginal_x(cfg.x0, i);
  return out;
}

NcSides nc_sides(const Behavior& behavior, const NcTestConfig& cfg) {
  cfg.validate();
  matching_setting(behavior, cfg);
  return nc_sides(behavior, cfg, constant_D(cfg));
}

double nc_lhs(const Behavior& behavior, const NcTestConfig& cfg) {
  const NcSides s = nc_sides(behavior, cfg);
  return s.lhs - s.rhs;
}

double rhs_zero_check(const NcTestConfig& cfg, std::optional<double> D) {
  cfg.validate();
  const double d = D ? *D : constant_D(cfg);

  // Bob: dense grid over the search square, then simplex polish of the best node.
  const Complex c = search_center(cfg);
  const double radius = search_radius(cfg);
  constexpr int kGrid = 201;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> best_at{c.real(), c.imag()};
  for (int p = 0; p < kGrid; ++p) {
    for (int q = 0; q < kGrid; ++q) {
      const double re = c.real() - radius + 2.0 * radius * p / (kGrid - 1);
      const double im = c.imag() - radius + 2.0 * radius * q / (kGrid - 1);
      const double v = chi_weighted_noclick(cfg, {re, im});
      if (v > best) {
        best = v;
        best_at = {re, im};
      }
    }
  }
  const numerics::SearchBox box{{c.real() - radius, c.imag() - radius},
                                {c.real() + radius, c.imag() + radius}};
  numerics::NelderMeadOptions polish;
  polish.initial_step = 0.01;
  const numerics::OptResult refined = numerics::nelder_mead_maximize(
      [&](const std::vector<double>& v) { return chi_weighted_noclick(cfg, {v[0], v[1]}); },
      best_at, box, polish);
  // The sum vanishes at infinity, so its supremum is never below zero.
  const double bob = std::max({best, refined.value, 0.0}) - d;

  // Alice: the Q symbol of the quadrature peaks at alpha_A = x0 e^{i phi0} / sqrt(2).
  const Complex alpha_a = std::polar(cfg.x0 / std::numbers::sqrt2, cfg.phi0);
  const double alice = phase_space::bhd_symbol(cfg.x0, cfg.phi0, alpha_a, 1.0);
  return alice * bob;
}

NcReport relative_violation(const Behavior& behavior, const NcTestConfig& cfg) {
  const NcSides s = nc_sides(behavior, cfg);
  if (!(s.rhs > 0.0)) {
    throw std::domain_error("right-hand side D P(x0|phi0) = " + format_double(s.rhs) +
                            " is not positive");
  }
  NcReport out;
  out.lhs = s.lhs;
  out.rhs = s.rhs;
  out.D = s.D;
  out.R = (s.lhs - s.rhs) / s.rhs;
  out.config = cfg;
  return out;
}

NcSearch tmsvs_nc_search(const TmsvsParams& params) {
  params.validate();
  const double sh = std::sinh(params.r);
  const double sigma2 = 1.0 + 2.0 * params.eff.eta_a * sh * sh;
  NcSearch out;
  out.x0_halfwidth = 4.0 * std::sqrt(sigma2 / 2.0);
  out.marginal_floor = 0.1 / std::sqrt(std::numbers::pi * std::cosh(2.0 * params.r));
  return out;
}

NcReport optimize_nc(const Behavior& behavior, const NcTestConfig& base, const NcSearch& search) {
  base.validate();
  if (search.grid < 2 || !(search.x0_halfwidth > 0.0) || !(search.alpha0_max > search.alpha0_min)) {
    throw std::invalid_argument("invalid nonclassicality search region");
  }
  const int i = matching_setting(behavior, base);

  std::map<double, double> d_cache;
  NcReport best;
  best.R = -std::numeric_limits<double>::infinity();
  std::vector<NcTraceEntry> trace;

  auto evaluate = [&](double x0, double alpha0) {
    NcTestConfig cfg = base;
    cfg.x0 = x0;
    cfg.alpha0 = alpha0;
    const bool feasible = behavior.marginal_x(x0, i) > search.marginal_floor;
    double R = -std::numeric_limits<double>::infinity();
    if (feasible) {
      auto it = d_cache.find(alpha0);
      if (it == d_cache.end()) it = d_cache.emplace(alpha0, constant_D(cfg)).first;
      const NcSides s = nc_sides(behavior, cfg, it->second);
      if (s.rhs > 0.0) {
        R = (s.lhs - s.rhs) / s.rhs;
        if (R > best.R) {
          best.lhs = s.lhs;
          best.rhs = s.rhs;
          best.D = s.D;
          best.R = R;
          best.config = cfg;
        }
      }
    }
    trace.push_back({x0, alpha0, R, feasible});
    return R;
  };

  for (int p = 0; p < search.grid; ++p) {
    const double x0 = -search.x0_halfwidth + 2.0 * search.x0_halfwidth * p / (search.grid - 1);
    for (int q = 0; q < search.grid; ++q) {
      const double a0 = search.alpha0_min + (search.alpha0_max - search.alpha0_min) * q / (search.grid - 1);
      evaluate(x0, a0);
    }
  }
  if (!std::isfinite(best.R)) {
    throw std::runtime_error("no grid point satisfies the marginal floor " +
                             format_double(search.marginal_floor));
  }

  const numerics::SearchBox box{{-search.x0_halfwidth, search.alpha0_min},
                                {search.x0_halfwidth, search.alpha0_max}};
  numerics::NelderMeadOptions local = search.local;
  local.initial_step = 0.5 / (search.grid - 1);
  numerics::nelder_mead_maximize(
      [&](const std::vector<double>& v) { return evaluate(v[0], v[1]); },
      {best.config.x0, best.config.alpha0}, box, local);

  best.trace = std::move(trace);
  return best;
}

HybridSettings figure_settings() {
  HybridSettings s;
  s.phi = {0.0, std::numbers::pi / 2};
  s.gamma = {Complex(0.0, 0.0), Complex(1.0, 0.0)};
  return s;
}

NcTestConfig figure_config() {
  NcTestConfig cfg;
  cfg.phi0 = 0.0;
  cfg.gamma1 = 0.0;
  cfg.gamma2 = 1.0;
  return cfg;
}

}  // namespace hybridbell::nonclassicality
