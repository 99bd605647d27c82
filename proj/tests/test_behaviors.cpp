#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hybridbell/behaviors.hpp"

using namespace hybridbell;

namespace {

const double kPi = std::numbers::pi;

TmsvsParams tmsvs(double r, double ea = 1.0, double eb = 1.0) { return {r, {ea, eb}}; }

HybridSettings settings(double p1, double p2, Complex g1, Complex g2) {
  HybridSettings s;
  s.phi = {p1, p2};
  s.gamma = {g1, g2};
  return s;
}

// Lossless two-mode squeezed vacuum, written with Re(gamma e^{-i phi}).
double lossless_noclick(double x, double phi, Complex gamma, double r) {
  const double c2 = std::cosh(r) * std::cosh(r);
  const double shift = x + std::sqrt(2.0) * (gamma * std::polar(1.0, -phi)).real() * std::tanh(r);
  return std::exp(-std::norm(gamma) / c2 - shift * shift) / (std::sqrt(kPi) * c2);
}

double lossless_conditional(double x, double phi, Complex gamma, double r) {
  const double c2 = std::cosh(r) * std::cosh(r);
  const double c2r = std::cosh(2.0 * r);
  const Complex g = gamma * std::polar(1.0, -phi);
  const double a = g.real() + x / std::sqrt(2.0) * std::tanh(2.0 * r);
  return std::sqrt(c2r) / c2 * std::exp(-c2r / c2 * a * a) * std::exp(-g.imag() * g.imag() / c2);
}

std::vector<BehaviorPtr> realizations() {
  std::vector<BehaviorPtr> out;
  const auto s1 = settings(0.0, kPi / 2, Complex(0.0, 0.0), Complex(1.0, 0.0));
  const auto s2 = settings(0.4, 5.1, Complex(-0.7, 0.3), Complex(0.2, -1.1));
  const auto s3 = settings(0.0, kPi / 2, Complex(0.0, 0.25), Complex(0.0, -0.25));
  for (double r : {0.0, 0.3, 1.0, 2.0}) {
    out.push_back(std::make_shared<TmsvsBehavior>(tmsvs(r), s1));
    out.push_back(std::make_shared<TmsvsBehavior>(tmsvs(r, 0.7, 0.6), s2));
  }
  for (double a : {0.0, 0.3, 1.0, 2.5}) {
    out.push_back(std::make_shared<CatBehavior>(CatParams{{a, 0.0}, {0.95, 0.95}}, s3));
    out.push_back(std::make_shared<CatBehavior>(CatParams{{a, 0.4}, {0.8, 0.6}}, s2));
  }
  out.push_back(std::make_shared<ClassicalProductBehavior>(
      ClassicalProductParams{{0.5, -0.2}, {0.3, 0.9}, 0.4, 0.7}, s2));
  out.push_back(factorized(out[3]));
  out.push_back(factorized(out[10]));
  return out;
}

}  // namespace

TEST_CASE("two-mode squeezed vacuum examples") {
  for (double x : {-2.0, 0.0, 0.7}) {
    for (double phi : {0.0, 1.3}) {
      CHECK(tmsvs_pdf(x, 0, phi, 0.0, tmsvs(0.0)) ==
            doctest::Approx(std::exp(-x * x) / std::sqrt(kPi)).epsilon(1e-14));
      CHECK(std::abs(tmsvs_pdf(x, 1, phi, 0.0, tmsvs(0.0))) < 1e-16);
    }
  }
  CHECK(tmsvs_pdf(0.0, 0, 0.0, 1.0, tmsvs(0.0)) ==
        doctest::Approx(std::exp(-1.0) / std::sqrt(kPi)).epsilon(1e-14));
  // Reference from a 30-digit evaluation of the lossy formula.
  CHECK(tmsvs_pdf(0.5, 0, 0.0, 1.0, tmsvs(1.0, 0.7, 0.6)) ==
        doctest::Approx(0.0371005766722954392499223493811).epsilon(1e-13));
  CHECK(tmsvs_pdf(0.5, 1, 0.0, 1.0, tmsvs(1.0, 0.7, 0.6)) ==
        doctest::Approx(0.265394363790522703067101524326).epsilon(1e-13));
}

TEST_CASE("two-mode squeezed vacuum marginal") {
  for (double r : {0.0, 0.5, 1.7}) {
    CHECK(tmsvs_marginal(0.3, 0.0, tmsvs(r)) ==
          doctest::Approx(std::exp(-0.09 / std::cosh(2 * r)) / std::sqrt(kPi * std::cosh(2 * r)))
              .epsilon(1e-14));
    CHECK(tmsvs_marginal(0.3, 0.0, tmsvs(r)) == tmsvs_marginal(0.3, 2.2, tmsvs(r)));
  }
  CHECK(tmsvs_marginal(0.0, 0.0, tmsvs(0.0)) == doctest::Approx(1.0 / std::sqrt(kPi)));
  const auto p = tmsvs(1.3, 0.7);
  const double width = std::sqrt(0.5 * (1.0 + 2.0 * 0.7 * std::sinh(1.3) * std::sinh(1.3)));
  const double total = numerics::integrate_real_line(
      [&](double x) { return tmsvs_marginal(x, 0.0, p); }, {}, 0.0, width);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("lossless limit matches the closed-form behavior") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> phase(0.0, 2 * kPi);
  std::uniform_real_distribution<double> squeeze(0.0, 2.5);
  for (int k = 0; k < 500; ++k) {
    const double r = squeeze(rng), x = u(rng), phi = phase(rng);
    const Complex g(u(rng), u(rng));
    CHECK(std::abs(tmsvs_pdf(x, 0, phi, g, tmsvs(r)) - lossless_noclick(x, phi, g, r)) < 1e-12);
    const double c2r = std::cosh(2 * r);
    const double click = std::exp(-x * x / c2r) / std::sqrt(kPi * c2r) - lossless_noclick(x, phi, g, r);
    CHECK(std::abs(tmsvs_pdf(x, 1, phi, g, tmsvs(r)) - click) < 1e-12);
    CHECK(std::abs(tmsvs_conditional_noclick(x, phi, g, tmsvs(r)) -
                   lossless_conditional(x, phi, g, r)) < 1e-12);
  }
}

TEST_CASE("conditional no-click probability") {
  for (double x : {-3.0, 0.0, 1.5}) CHECK(tmsvs_conditional_noclick(x, 0.4, 0.0, tmsvs(0.0)) == 1.0);
  const double r = 1.0;
  const double analytic = std::sqrt(std::cosh(2 * r)) / (std::cosh(r) * std::cosh(r));
  CHECK(analytic == doctest::Approx(0.8145985).epsilon(1e-6));
  CHECK(tmsvs_conditional_noclick_max(tmsvs(r)) == doctest::Approx(analytic).epsilon(1e-14));
  double best = 0.0;
  for (int a = 0; a <= 60; ++a) {
    for (int b = 0; b <= 40; ++b) {
      for (double phi : {0.0, 1.0, 2.5}) {
        const double x = -3.0 + 0.1 * a;
        const Complex g(-2.0 + 0.1 * b, 0.0);
        best = std::max(best, tmsvs_conditional_noclick(x, phi, g * std::polar(1.0, phi), tmsvs(r)));
      }
    }
  }
  CHECK(best <= analytic + 1e-15);
  CHECK(best == doctest::Approx(analytic).epsilon(1e-3));
  const double threshold = std::acosh(std::sqrt(2 * std::sqrt(3.0) + 4));
  CHECK(threshold == doctest::Approx(1.6628).epsilon(1e-4));
  CHECK(tmsvs_conditional_noclick_max(tmsvs(threshold)) == doctest::Approx(0.5).epsilon(1e-13));
  // Bayes ratio form.
  const auto p = tmsvs(0.8, 0.7, 0.6);
  CHECK(tmsvs_conditional_noclick(0.4, 0.3, Complex(0.2, 0.5), p) ==
        doctest::Approx(tmsvs_pdf(0.4, 0, 0.3, Complex(0.2, 0.5), p) / tmsvs_marginal(0.4, 0.3, p))
            .epsilon(1e-13));
  CHECK_THROWS_AS(tmsvs_conditional_noclick(1e5, 0.0, 0.0, tmsvs(0.0)), std::domain_error);
}

TEST_CASE("parameter invariants") {
  CHECK_THROWS_AS(tmsvs_pdf(0.0, 0, 0.0, 0.0, tmsvs(10.5)), std::invalid_argument);
  CHECK_THROWS_AS(tmsvs_pdf(0.0, 0, 0.0, 0.0, tmsvs(1.0, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(tmsvs_pdf(0.0, 0, 0.0, 0.0, tmsvs(1.0, 1.0, 1.2)), std::invalid_argument);
  CHECK_THROWS_AS(tmsvs_pdf(0.0, 2, 0.0, 0.0, tmsvs(1.0)), std::out_of_range);
  CHECK_NOTHROW(tmsvs_pdf(1.0, 0, 0.0, 2.0, tmsvs(10.0)));
  CHECK(std::isfinite(tmsvs_pdf(1.0, 1, 0.0, 2.0, tmsvs(10.0))));
  CHECK_THROWS_AS(cat_pdf(0.0, 0, 0.0, 0.0, CatParams{{21.0, 0.0}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(TmsvsBehavior(tmsvs(1.0), settings(2 * kPi, 0.0, 0.0, 1.0)),
                  std::invalid_argument);
  const auto wrapped = settings(2 * kPi + 0.5, -0.5, 0.0, 1.0).wrapped();
  CHECK(wrapped.phi[0] == doctest::Approx(0.5));
  CHECK(wrapped.phi[1] == doctest::Approx(2 * kPi - 0.5));
  CHECK_NOTHROW(wrapped.validate());
  TmsvsBehavior b(tmsvs(1.0), settings(0.0, 1.0, 0.0, 1.0));
  CHECK_THROWS_AS(b.pdf(0.0, 0, 3, 1), std::out_of_range);
  CHECK_THROWS_AS(b.pdf(0.0, 0, 1, 0), std::out_of_range);
}

TEST_CASE("cat-state behavior") {
  const CatParams vac{{0.0, 0.0}, {1.0, 1.0}};
  for (double x : {-1.0, 0.0, 0.6}) {
    CHECK(cat_pdf(x, 0, 0.9, 0.0, vac) ==
          doctest::Approx(std::exp(-x * x) / (2 * std::sqrt(kPi))).epsilon(1e-14));
  }
  const CatParams p{{1.0, 0.0}, {0.95, 0.95}};
  const double total = numerics::integrate_real_line(
      [&](double x) {
        return cat_pdf(x, 0, kPi / 2, Complex(0, 0.25), p) + cat_pdf(x, 1, kPi / 2, Complex(0, 0.25), p);
      },
      {}, 0.0, 1.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

  // Interference term damped by e^{-2|alpha0|^2}.
  const CatParams big{{3.0, 0.0}, {0.95, 0.95}};
  const Complex g(0.3, 0.2);
  for (double x : {-4.2, -1.0, 0.0, 4.2}) {
    const double a = std::sqrt(0.95) * 3.0;
    const double without =
        0.5 * std::exp(-std::norm(g)) *
        (phase_space::bhd_symbol(x, 0.0, a, 1.0) +
         phase_space::bhd_symbol(x, 0.0, -a, 1.0) * (1 - 0.95 + 0.95 * std::norm(g)));
    const double with = cat_pdf(x, 0, 0.0, g, big);
    // Relative to the peak of the density.
    CHECK(std::abs(with - without) <= 2e-8 * cat_marginal(std::sqrt(2.0 * 0.95) * 3.0, 0.0, big));
  }
  // Even marginal for real alpha0.
  for (double x : {0.2, 1.1, 2.7}) {
    for (double phi : {0.0, 0.8}) {
      const CatParams q{{0.9, 0.0}, {0.7, 0.6}};
      CHECK(cat_marginal(x, phi, q) == doctest::Approx(cat_marginal(-x, phi, q)).epsilon(1e-14));
    }
  }
}

TEST_CASE("normalization, no-signaling and positivity of every realization") {
  const numerics::IntegrationConfig cfg;
  for (const auto& b : realizations()) {
    for (int i = 1; i <= 2; ++i) {
      std::array<double, 2> mass{};
      for (int j = 1; j <= 2; ++j) {
        for (int n = 0; n <= 1; ++n) {
          mass[j - 1] += b->integrate_x([&](double x) { return b->pdf(x, n, i, j); }, i, cfg);
        }
        CHECK(std::abs(mass[j - 1] - 1.0) < 1e-8);
      }
      CHECK(std::abs(mass[0] - mass[1]) < 1e-8);
      for (double x = -6.0; x <= 6.0; x += 0.37) {
        const double s1 = b->pdf(x, 0, i, 1) + b->pdf(x, 1, i, 1);
        const double s2 = b->pdf(x, 0, i, 2) + b->pdf(x, 1, i, 2);
        CHECK(std::abs(s1 - s2) < 1e-12);
        CHECK(std::abs(s1 - b->marginal_x(x, i)) < 1e-12);
      }
    }
  }
}

TEST_CASE("non-negativity on a stratified sample") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double x = -8.0 + 16.0 * (k % 100 + unit(rng)) / 100.0;
    const double phi = 2 * kPi * unit(rng);
    const Complex g(6 * unit(rng) - 3, 6 * unit(rng) - 3);
    const int n = k % 2;
    if ((k / 2) % 2 == 0) {
      const auto p = tmsvs(3.0 * unit(rng), 0.05 + 0.95 * unit(rng), 0.05 + 0.95 * unit(rng));
      worst = std::min(worst, tmsvs_pdf(x, n, phi, g, p));
    } else {
      const CatParams p{{4 * unit(rng) - 2, 4 * unit(rng) - 2}, {0.05 + 0.95 * unit(rng), 0.05 + 0.95 * unit(rng)}};
      worst = std::min(worst, cat_pdf(x, n, phi, g, p));
    }
  }
  CHECK(worst >= -1e-12);
}

TEST_CASE("factorized behavior") {
  const auto s = settings(0.0, 1.0, 0.0, 1.0);
  auto vac = std::make_shared<TmsvsBehavior>(tmsvs(0.0), s);
  auto fv = factorized(vac);
  auto squeezed = std::make_shared<TmsvsBehavior>(tmsvs(1.0), s);
  auto fs = factorized(squeezed);
  auto ffs = factorized(fs);
  for (double x : {-1.5, 0.0, 0.5, 2.0}) {
    for (int n = 0; n <= 1; ++n) {
      for (int i = 1; i <= 2; ++i) {
        for (int j = 1; j <= 2; ++j) {
          CHECK(std::abs(fv->pdf(x, n, i, j) - vac->pdf(x, n, i, j)) < 1e-9);
          CHECK(std::abs(ffs->pdf(x, n, i, j) - fs->pdf(x, n, i, j)) < 1e-9);
        }
      }
    }
  }
  CHECK(std::abs(fs->pdf(0.5, 0, 1, 2) - squeezed->pdf(0.5, 0, 1, 2)) > 1e-3);
  // Bob's marginal of the squeezed vacuum is a thermal state with nbar = sinh^2 r.
  const double nbar = std::sinh(1.0) * std::sinh(1.0);
  const auto* f = dynamic_cast<const FactorizedBehavior*>(fs.get());
  REQUIRE(f != nullptr);
  CHECK(f->bob_noclick(1) == doctest::Approx(1.0 / (1.0 + nbar)).epsilon(1e-9));
  CHECK(f->bob_noclick(2) == doctest::Approx(std::exp(-1.0 / (1.0 + nbar)) / (1.0 + nbar)).epsilon(1e-9));
}

TEST_CASE("tabulated behavior round trip") {
  const auto s = settings(0.0, kPi / 2, 0.0, 1.0);
  TmsvsBehavior source(tmsvs(0.7), s);
  std::vector<double> grid;
  for (int k = 0; k <= 800; ++k) grid.push_back(-8.0 + 0.02 * k);
  const auto rows = tabulate(source, grid);
  std::stringstream io;
  write_tabulated_csv(io, rows);
  const auto parsed = read_tabulated_csv(io);
  REQUIRE(parsed.size() == rows.size());
  CHECK(parsed[17].p == rows[17].p);
  TabulatedBehavior tab(parsed, s);
  CHECK(tab.pdf(grid[300], 0, 2, 1) == doctest::Approx(source.pdf(grid[300], 0, 2, 1)).epsilon(1e-14));
  CHECK(tab.pdf(0.011, 1, 1, 2) == doctest::Approx(source.pdf(0.011, 1, 1, 2)).epsilon(1e-3));
  CHECK(tab.pdf(9.0, 0, 1, 1) == 0.0);
  const double mass = tab.integrate_x([&](double x) { return tab.marginal_x(x, 1); }, 1, {});
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));

  std::vector<TabulatedSample> ragged = rows;
  ragged.pop_back();
  CHECK_THROWS_AS(TabulatedBehavior(ragged, s), std::invalid_argument);
  std::stringstream bad_header("x,n,i,p\n");
  CHECK_THROWS_AS(read_tabulated_csv(bad_header), std::runtime_error);
  std::stringstream bad_row("x,n,i,j,p\n0.1,0,1,1,abc\n");
  CHECK_THROWS_AS(read_tabulated_csv(bad_row), std::runtime_error);
}

TEST_CASE("outcome sampling") {
  const auto s = settings(0.0, kPi / 2, 0.0, 1.0);
  TmsvsBehavior vac(tmsvs(0.0), s);
  for (const Outcome& o : sample_outcomes(vac, 1, 1, 2000, 5)) CHECK(o.n == 0);

  TmsvsBehavior sq(tmsvs(1.0), s);
  const long count = 100000;
  const auto draws = sample_outcomes(sq, 1, 2, count, 17);
  double mean = 0.0, clicks = 0.0;
  for (const Outcome& o : draws) {
    mean += o.x;
    clicks += o.n;
  }
  mean /= count;
  const double sigma = std::sqrt(std::cosh(2.0) / 2.0);
  CHECK(std::abs(mean) < 4 * sigma / std::sqrt(static_cast<double>(count)));
  // Click rate against the quadrature value of the click probability.
  const double p_click = sq.integrate_x([&](double x) { return sq.pdf(x, 1, 1, 2); }, 1, {});
  CHECK(std::abs(clicks / count - p_click) < 4 * std::sqrt(p_click * (1 - p_click) / count));

  const auto again = sample_outcomes(sq, 1, 2, 100, 17);
  for (std::size_t k = 0; k < again.size(); ++k) {
    CHECK(again[k].x == draws[k].x);
    CHECK(again[k].n == draws[k].n);
  }
  CHECK(sample_outcomes(sq, 1, 2, 1, 18)[0].x != draws[0].x);
  CHECK_THROWS_AS(sample_outcomes(sq, 1, 2, 0, 1), std::invalid_argument);
}
