#include "hybridbell/behaviors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hybridbell/format.hpp"

namespace hybridbell {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_finite(Complex z, const char* name) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw std::invalid_argument(std::string(name) + " must be finite");
  }
}

void check_outcome(int n) {
  if (n != 0 && n != 1) {
    throw std::out_of_range("click outcome must be 0 or 1, got " + std::to_string(n));
  }
}

// Unit-width quadrature Gaussian centred at sqrt(2) Re(alpha e^{-i phi}).
double unit_gaussian(double x, double phi, Complex alpha) {
  return phase_space::bhd_symbol(x, phi, alpha, 1.0);
}

struct LossySigmas {
  double s1;
  double s2;
  double s3;
  double coupling;  // sqrt(eta_A eta_B / 2) sinh 2r
};

// cosh and sinh stay below e^20 for r <= 10, so the sigmas are formed directly;
// the densities themselves are assembled as one exponential of a summed log.
LossySigmas lossy_sigmas(const TmsvsParams& p) {
  const double ea = p.eff.eta_a;
  const double eb = p.eff.eta_b;
  const double sh = std::sinh(p.r);
  const double ch = std::cosh(p.r);
  const double sh2 = sh * sh;
  LossySigmas s{};
  s.s2 = 1.0 + 2.0 * ea * sh2;
  s.s1 = eb * ch * ch + (1.0 - eb) * s.s2;
  s.s3 = 1.0 + eb * sh2;
  s.coupling = std::sqrt(0.5 * ea * eb) * std::sinh(2.0 * p.r);
  return s;
}

// Exponent of the no-click density without the -x^2/sigma_2 marginal factor.
double tmsvs_conditional_log(double x, double phi, Complex gamma, const LossySigmas& s) {
  const Complex rotated = gamma * std::polar(1.0, -phi);
  const double shifted = rotated.real() + x * s.coupling / s.s2;
  const double b = rotated.imag();
  return -(s.s2 / s.s1) * shifted * shifted - b * b / s.s3;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double linear_interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (xs.empty() || x < xs.front() || x > xs.back()) return 0.0;
  if (xs.size() == 1) return ys.front();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys.back();
  const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

}  // namespace

void check_setting_index(int index, const char* name) {
  if (index != 1 && index != 2) {
    throw std::out_of_range(std::string(name) + " must be 1 or 2, got " + std::to_string(index));
  }
}

void HybridSettings::validate() const {
  for (double p : phi) {
    if (!(p >= 0.0 && p < kTwoPi)) {
      throw std::invalid_argument("phase must lie in [0, 2 pi), got " + format_double(p));
    }
  }
  for (const Complex& g : gamma) require_finite(g, "gamma");
}

HybridSettings HybridSettings::wrapped() const {
  HybridSettings out = *this;
  for (double& p : out.phi) {
    if (!std::isfinite(p)) throw std::invalid_argument("phase must be finite");
    p = std::fmod(p, kTwoPi);
    if (p < 0.0) p += kTwoPi;
    if (p >= kTwoPi) p = 0.0;
  }
  return out;
}

void Efficiencies::validate() const {
  if (!(eta_a > 0.0 && eta_a <= 1.0) || !(eta_b > 0.0 && eta_b <= 1.0)) {
    throw std::invalid_argument("detection efficiencies must lie in (0, 1]");
  }
}

void TmsvsParams::validate() const {
  if (!(r >= 0.0 && r <= 10.0)) {
    throw std::invalid_argument("squeezing parameter must lie in [0, 10], got " + format_double(r));
  }
  eff.validate();
}

void CatParams::validate() const {
  require_finite(alpha0, "alpha0");
  if (std::abs(alpha0) > 20.0) throw std::invalid_argument("|alpha0| must not exceed 20");
  eff.validate();
}

double Behavior::pdf(double x, int n, int i, int j) const {
  check_outcome(n);
  check_setting_index(i, "quadrature setting");
  check_setting_index(j, "displacement setting");
  const double no_click = noclick_density(x, i, j);
  return n == 0 ? no_click : marginal_x(x, i) - no_click;
}

double Behavior::integrate_x(const numerics::RealFunction& g, int i,
                             const numerics::IntegrationConfig& cfg) const {
  const QuadratureWindow w = window(i);
  return numerics::integrate_real_line(g, cfg, w.center, w.width);
}

// --- two-mode squeezed vacuum ---

double tmsvs_marginal(double x, double /*phi*/, const TmsvsParams& params) {
  params.validate();
  const double s2 = lossy_sigmas(params).s2;
  return std::exp(-x * x / s2) / std::sqrt(std::numbers::pi * s2);
}

double tmsvs_pdf(double x, int n, double phi, Complex gamma, const TmsvsParams& params) {
  check_outcome(n);
  params.validate();
  require_finite(gamma, "gamma");
  const LossySigmas s = lossy_sigmas(params);
  const double log_no_click = -0.5 * std::log(std::numbers::pi * s.s1 * s.s3) +
                              tmsvs_conditional_log(x, phi, gamma, s) - x * x / s.s2;
  const double no_click = std::exp(log_no_click);
  if (n == 0) return no_click;
  return std::exp(-x * x / s.s2) / std::sqrt(std::numbers::pi * s.s2) - no_click;
}

double tmsvs_conditional_noclick(double x, double phi, Complex gamma, const TmsvsParams& params) {
  params.validate();
  require_finite(gamma, "gamma");
  if (!(tmsvs_marginal(x, phi, params) > 0.0)) {
    throw std::domain_error("quadrature marginal vanishes at x = " + format_double(x));
  }
  // Ratio of the no-click density to the marginal, with the common factor cancelled.
  const LossySigmas s = lossy_sigmas(params);
  return std::sqrt(s.s2 / (s.s1 * s.s3)) * std::exp(tmsvs_conditional_log(x, phi, gamma, s));
}

double tmsvs_conditional_noclick_max(const TmsvsParams& params) {
  params.validate();
  const LossySigmas s = lossy_sigmas(params);
  return std::sqrt(s.s2 / (s.s1 * s.s3));
}

TmsvsBehavior::TmsvsBehavior(const TmsvsParams& params, const HybridSettings& settings)
    : params_(params), settings_(settings) {
  params_.validate();
  settings_.validate();
}

double TmsvsBehavior::noclick_density(double x, int i, int j) const {
  check_setting_index(i, "quadrature setting");
  check_setting_index(j, "displacement setting");
  return tmsvs_pdf(x, 0, settings_.phi[i - 1], settings_.gamma[j - 1], params_);
}

double TmsvsBehavior::marginal_x(double x, int i) const {
  check_setting_index(i, "quadrature setting");
  return tmsvs_marginal(x, settings_.phi[i - 1], params_);
}

QuadratureWindow TmsvsBehavior::window(int /*i*/) const {
  return {0.0, std::sqrt(0.5 * lossy_sigmas(params_).s2)};
}

// --- cat state ---

double cat_marginal(double x, double phi, const CatParams& params) {
  params.validate();
  const Complex a = std::sqrt(params.eff.eta_a) * params.alpha0;
  return 0.5 * (unit_gaussian(x, phi, a) + unit_gaussian(x, phi, -a));
}

double cat_pdf(double x, int n, double phi, Complex gamma, const CatParams& params) {
  check_outcome(n);
  params.validate();
  require_finite(gamma, "gamma");
  const double ea = params.eff.eta_a;
  const double eb = params.eff.eta_b;
  const Complex a = std::sqrt(ea) * params.alpha0;
  const double g2 = std::norm(gamma);

  // Interference term: Re[gamma exp(-(x - i y)^2)] e^{-2|alpha0|^2}, with the
  // growing factor e^{y^2} folded into one exponent.
  const double y = std::sqrt(2.0 * ea) * (params.alpha0 * std::polar(1.0, -phi)).imag();
  const double damping = std::exp(-2.0 * std::norm(params.alpha0) - x * x + y * y);
  const double phase = 2.0 * x * y;
  const double interference =
      (gamma.real() * std::cos(phase) - gamma.imag() * std::sin(phase)) * damping;

  const double no_click =
      0.5 * std::exp(-g2) *
      (unit_gaussian(x, phi, a) + unit_gaussian(x, phi, -a) * (1.0 - eb + eb * g2) +
       2.0 / std::sqrt(std::numbers::pi) * std::sqrt(eb) * interference);
  if (n == 0) return no_click;
  return cat_marginal(x, phi, params) - no_click;
}

CatBehavior::CatBehavior(const CatParams& params, const HybridSettings& settings)
    : params_(params), settings_(settings) {
  params_.validate();
  settings_.validate();
}

double CatBehavior::noclick_density(double x, int i, int j) const {
  check_setting_index(i, "quadrature setting");
  check_setting_index(j, "displacement setting");
  return cat_pdf(x, 0, settings_.phi[i - 1], settings_.gamma[j - 1], params_);
}

double CatBehavior::marginal_x(double x, int i) const {
  check_setting_index(i, "quadrature setting");
  return cat_marginal(x, settings_.phi[i - 1], params_);
}

QuadratureWindow CatBehavior::window(int i) const {
  check_setting_index(i, "quadrature setting");
  const Complex a = std::sqrt(params_.eff.eta_a) * params_.alpha0;
  const double shift =
      std::abs(std::numbers::sqrt2 * (a * std::polar(1.0, -settings_.phi[i - 1])).real());
  // Wide enough that the truncated domain covers both mixture components.
  return {0.0, std::numbers::sqrt2 / 2.0 + shift / 8.0};
}

// --- classical product reference state ---

void ClassicalProductParams::validate() const {
  require_finite(alpha_a, "alpha_a");
  require_finite(alpha_b, "alpha_b");
  if (!(nbar_a >= 0.0) || !(nbar_b >= 0.0) || !std::isfinite(nbar_a) || !std::isfinite(nbar_b)) {
    throw std::invalid_argument("thermal photon numbers must be finite and non-negative");
  }
}

double ClassicalProductParams::quasiprobability(Complex a, Complex b) const {
  if (!(nbar_a > 0.0) || !(nbar_b > 0.0)) {
    throw std::domain_error("P function of a coherent component is singular");
  }
  const double ga = std::exp(-std::norm(a - alpha_a) / nbar_a) / (std::numbers::pi * nbar_a);
  const double gb = std::exp(-std::norm(b - alpha_b) / nbar_b) / (std::numbers::pi * nbar_b);
  return ga * gb;
}

ClassicalProductBehavior::ClassicalProductBehavior(const ClassicalProductParams& params,
                                                   const HybridSettings& settings)
    : params_(params), settings_(settings) {
  params_.validate();
  settings_.validate();
}

double ClassicalProductBehavior::marginal_x(double x, int i) const {
  check_setting_index(i, "quadrature setting");
  const double var = 1.0 + 2.0 * params_.nbar_a;
  const double u =
      std::numbers::sqrt2 * (params_.alpha_a * std::polar(1.0, -settings_.phi[i - 1])).real();
  return std::exp(-(x - u) * (x - u) / var) / std::sqrt(std::numbers::pi * var);
}

double ClassicalProductBehavior::noclick_density(double x, int i, int j) const {
  check_setting_index(j, "displacement setting");
  const double spread = 1.0 + params_.nbar_b;
  const double bob =
      std::exp(-std::norm(params_.alpha_b - settings_.gamma[j - 1]) / spread) / spread;
  return marginal_x(x, i) * bob;
}

QuadratureWindow ClassicalProductBehavior::window(int i) const {
  check_setting_index(i, "quadrature setting");
  const double u =
      std::numbers::sqrt2 * (params_.alpha_a * std::polar(1.0, -settings_.phi[i - 1])).real();
  return {u, std::sqrt(0.5 * (1.0 + 2.0 * params_.nbar_a))};
}

// --- factorized ---

FactorizedBehavior::FactorizedBehavior(BehaviorPtr source, const numerics::IntegrationConfig& cfg)
    : source_(std::move(source)) {
  if (!source_) throw std::invalid_argument("factorized behavior needs a source behavior");
  for (int j = 1; j <= 2; ++j) {
    double total = 0.0;
    for (int i = 1; i <= 2; ++i) {
      total += source_->integrate_x(
          [this, i, j](double x) { return source_->noclick_density(x, i, j); }, i, cfg);
    }
    bob_noclick_[j - 1] = 0.5 * total;
  }
}

double FactorizedBehavior::noclick_density(double x, int i, int j) const {
  check_setting_index(j, "displacement setting");
  return source_->marginal_x(x, i) * bob_noclick_[j - 1];
}

double FactorizedBehavior::marginal_x(double x, int i) const { return source_->marginal_x(x, i); }

double FactorizedBehavior::integrate_x(const numerics::RealFunction& g, int i,
                                       const numerics::IntegrationConfig& cfg) const {
  return source_->integrate_x(g, i, cfg);
}

double FactorizedBehavior::bob_noclick(int j) const {
  check_setting_index(j, "displacement setting");
  return bob_noclick_[j - 1];
}

BehaviorPtr factorized(BehaviorPtr behavior, const numerics::IntegrationConfig& cfg) {
  return std::make_shared<FactorizedBehavior>(std::move(behavior), cfg);
}

// --- tabulated ---

TabulatedBehavior::TabulatedBehavior(const std::vector<TabulatedSample>& samples,
                                     const HybridSettings& settings)
    : settings_(settings) {
  settings_.validate();
  std::array<std::array<std::map<double, double>, 2>, 4> cells;
  for (const TabulatedSample& s : samples) {
    check_outcome(s.n);
    check_setting_index(s.i, "quadrature setting");
    check_setting_index(s.j, "displacement setting");
    if (!std::isfinite(s.x) || !std::isfinite(s.p)) {
      throw std::invalid_argument("tabulated values must be finite");
    }
    auto& cell = cells[2 * (s.i - 1) + (s.j - 1)][s.n];
    if (!cell.emplace(s.x, s.p).second) {
      throw std::invalid_argument("duplicate tabulated entry at x = " + format_double(s.x));
    }
  }
  for (int c = 0; c < 4; ++c) {
    const auto& p0 = cells[c][0];
    const auto& p1 = cells[c][1];
    if (p0.size() < 2 || p0.size() != p1.size() ||
        !std::equal(p0.begin(), p0.end(), p1.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw std::invalid_argument(
          "tabulated grid must be rectangular in x with at least two nodes per setting pair");
    }
    Slice& slice = slices_[c];
    for (const auto& [x, p] : p0) {
      slice.x.push_back(x);
      slice.p[0].push_back(p);
    }
    for (const auto& entry : p1) slice.p[1].push_back(entry.second);
  }
  for (int i = 1; i <= 2; ++i) {
    std::vector<double>& nodes = nodes_[i - 1];
    nodes = slice(i, 1).x;
    nodes.insert(nodes.end(), slice(i, 2).x.begin(), slice(i, 2).x.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  }
}

double TabulatedBehavior::tabulated(double x, int n, int i, int j) const {
  check_outcome(n);
  check_setting_index(i, "quadrature setting");
  check_setting_index(j, "displacement setting");
  const Slice& s = slice(i, j);
  return linear_interp(s.x, s.p[n], x);
}

double TabulatedBehavior::noclick_density(double x, int i, int j) const {
  return tabulated(x, 0, i, j);
}

// Averaged over Bob's settings; data that satisfy no-signaling give either one.
double TabulatedBehavior::marginal_x(double x, int i) const {
  double total = 0.0;
  for (int j = 1; j <= 2; ++j) total += tabulated(x, 0, i, j) + tabulated(x, 1, i, j);
  return 0.5 * total;
}

QuadratureWindow TabulatedBehavior::window(int i) const {
  check_setting_index(i, "quadrature setting");
  const std::vector<double>& nodes = nodes_[i - 1];
  return {0.5 * (nodes.front() + nodes.back()), (nodes.back() - nodes.front()) / 16.0};
}

double TabulatedBehavior::integrate_x(const numerics::RealFunction& g, int i,
                                      const numerics::IntegrationConfig& /*cfg*/) const {
  check_setting_index(i, "quadrature setting");
  const std::vector<double>& nodes = nodes_[i - 1];
  double total = 0.0;
  double prev = g(nodes.front());
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double cur = g(nodes[k]);
    total += 0.5 * (nodes[k] - nodes[k - 1]) * (prev + cur);
    prev = cur;
  }
  return total;
}

std::vector<TabulatedSample> tabulate(const Behavior& behavior, const std::vector<double>& x_grid) {
  std::vector<TabulatedSample> rows;
  rows.reserve(8 * x_grid.size());
  for (int i = 1; i <= 2; ++i) {
    for (int j = 1; j <= 2; ++j) {
      for (int n = 0; n <= 1; ++n) {
        for (double x : x_grid) rows.push_back({x, n, i, j, behavior.pdf(x, n, i, j)});
      }
    }
  }
  return rows;
}

void write_tabulated_csv(std::ostream& out, const std::vector<TabulatedSample>& rows) {
  out << "x,n,i,j,p\n";
  for (const TabulatedSample& r : rows) {
    out << format_double(r.x) << ',' << r.n << ',' << r.i << ',' << r.j << ','
        << format_double(r.p) << '\n';
  }
}

std::vector<TabulatedSample> read_tabulated_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("tabulated behavior file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,n,i,j,p") {
    throw std::runtime_error("tabulated behavior header must be 'x,n,i,j,p', got '" + line + "'");
  }
  std::vector<TabulatedSample> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string x, n, i, j, p, extra;
    if (!std::getline(fields, x, ',') || !std::getline(fields, n, ',') ||
        !std::getline(fields, i, ',') || !std::getline(fields, j, ',') ||
        !std::getline(fields, p, ',') || std::getline(fields, extra, ',')) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected 5 fields");
    }
    try {
      std::size_t used = 0;
      TabulatedSample s{};
      s.x = std::stod(x, &used);
      if (used != x.size()) throw std::invalid_argument(x);
      s.n = std::stoi(n, &used);
      if (used != n.size()) throw std::invalid_argument(n);
      s.i = std::stoi(i, &used);
      if (used != i.size()) throw std::invalid_argument(i);
      s.j = std::stoi(j, &used);
      if (used != j.size()) throw std::invalid_argument(j);
      s.p = std::stod(p, &used);
      if (used != p.size()) throw std::invalid_argument(p);
      rows.push_back(s);
    } catch (const std::logic_error&) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

// --- sampling ---

double counter_uniform(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ index);
  h = splitmix64(h ^ (stream * 0xD1B54A32D192ED03ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::vector<Outcome> sample_outcomes(const Behavior& behavior, int i, int j, long count,
                                     std::uint64_t seed) {
  check_setting_index(i, "quadrature setting");
  check_setting_index(j, "displacement setting");
  if (count < 1) throw std::invalid_argument("sample count must be at least 1");

  constexpr std::size_t kNodes = std::size_t{1} << 14;
  const QuadratureWindow w = behavior.window(i);
  const double lo = w.center - 8.0 * w.width;
  const double step = 16.0 * w.width / static_cast<double>(kNodes - 1);
  std::vector<double> xs(kNodes);
  std::vector<double> cdf(kNodes, 0.0);
  double prev = 0.0;
  for (std::size_t k = 0; k < kNodes; ++k) {
    xs[k] = lo + step * static_cast<double>(k);
    const double dens = std::max(behavior.marginal_x(xs[k], i), 0.0);
    if (k > 0) cdf[k] = cdf[k - 1] + 0.5 * step * (prev + dens);
    prev = dens;
  }
  const double total = cdf.back();
  if (!(total > 0.0)) throw std::domain_error("quadrature marginal has no mass to sample");

  std::vector<Outcome> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long k = 0; k < count; ++k) {
    const auto index = static_cast<std::uint64_t>(k);
    const double target = counter_uniform(seed, index, 0) * total;
    auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
    std::size_t hi = static_cast<std::size_t>(it - cdf.begin());
    hi = std::clamp<std::size_t>(hi, 1, kNodes - 1);
    const std::size_t lo_idx = hi - 1;
    const double span = cdf[hi] - cdf[lo_idx];
    const double t = span > 0.0 ? (target - cdf[lo_idx]) / span : 0.0;
    const double x = xs[lo_idx] + t * (xs[hi] - xs[lo_idx]);

    const double marginal = behavior.marginal_x(x, i);
    const double p_no_click =
        marginal > 0.0 ? std::clamp(behavior.noclick_density(x, i, j) / marginal, 0.0, 1.0) : 1.0;
    const int n = counter_uniform(seed, index, 1) < p_no_click ? 0 : 1;
    out.push_back({x, n});
  }
  return out;
}

}  // namespace hybridbell
