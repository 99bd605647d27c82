#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "hybridbell/numerics.hpp"
#include "hybridbell/phase_space.hpp"

using hybridbell::Complex;
using namespace hybridbell::phase_space;

TEST_CASE("balanced homodyne symbol examples") {
  const double peak = 1.0 / std::sqrt(std::numbers::pi);
  CHECK(bhd_symbol(0.0, 0.0, 0.0, 1.0) == doctest::Approx(peak).epsilon(1e-15));
  CHECK(bhd_symbol(std::numbers::sqrt2, 0.0, 1.0, 1.0) == doctest::Approx(peak).epsilon(1e-15));
  auto f = [](double x) { return bhd_symbol(x, 0.7, Complex(0.3, 0.2), 0.5); };
  const double shift = std::numbers::sqrt2 * (Complex(0.3, 0.2) * std::polar(1.0, -0.7)).real();
  const double total =
      hybridbell::numerics::integrate_real_line(f, {}, shift, std::sqrt(0.25));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("balanced homodyne symbol rejects the delta limit") {
  CHECK_THROWS_AS(bhd_symbol(0.0, 0.0, 0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(bhd_symbol(0.0, 0.0, 0.0, -0.5), std::domain_error);
  CHECK_THROWS_AS(bhd_symbol(0.0, 0.0, 0.0, 1.5), std::domain_error);
  try {
    bhd_symbol(0.0, 0.0, 0.0, 0.0);
  } catch (const std::domain_error& e) {
    CHECK(std::string(e.what()).find("delta") != std::string::npos);
  }
  CHECK_THROWS_AS(bhd_symbol(0.0, 0.0, Complex(NAN, 0.0), 1.0), std::domain_error);
}

TEST_CASE("unbalanced homodyne symbol examples") {
  CHECK(uhd_symbol(0, Complex(0.4, -1.0), Complex(0.4, -1.0)) == 1.0);
  CHECK(uhd_symbol(1, Complex(0.4, -1.0), Complex(0.4, -1.0)) == 0.0);
  CHECK(uhd_symbol(0, 0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK_THROWS_AS(uhd_symbol(2, 0.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(uhd_symbol(-1, 0.0, 0.0), std::domain_error);
}

TEST_CASE("ordering parameter range") {
  CHECK(OrderingParam(-1.0).value() == -1.0);
  CHECK(OrderingParam(1.0).value() == 1.0);
  CHECK_THROWS_AS(OrderingParam(1.01), std::domain_error);
  CHECK_THROWS_AS(OrderingParam(NAN), std::domain_error);
}

TEST_CASE("symbol invariants on randomized inputs") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> order(0.05, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Complex alpha(u(rng), u(rng));
    const Complex gamma(u(rng), u(rng));
    // Outcomes of the click detector are complementary exactly.
    CHECK(uhd_symbol(0, gamma, alpha) + uhd_symbol(1, gamma, alpha) == 1.0);
    // Dependence only through |alpha - gamma|.
    const Complex rot = std::polar(1.0, phase(rng));
    CHECK(uhd_symbol(0, gamma * rot, alpha * rot) ==
          doctest::Approx(uhd_symbol(0, gamma, alpha)).epsilon(1e-13));

    const double x = u(rng);
    const double phi = phase(rng);
    const double theta = phase(rng);
    const double s = order(rng);
    CHECK(std::abs(bhd_symbol(x, phi + theta, alpha * std::polar(1.0, theta), s) -
                   bhd_symbol(x, phi, alpha, s)) < 1e-12);
    CHECK(bhd_symbol(x, phi, alpha, s) >= 0.0);
  }
  for (int trial = 0; trial < 30; ++trial) {
    const Complex alpha(u(rng), u(rng));
    const double phi = phase(rng);
    const double s = order(rng);
    const double center = std::numbers::sqrt2 * (alpha * std::polar(1.0, -phi)).real();
    const double total = hybridbell::numerics::integrate_real_line(
        [&](double x) { return bhd_symbol(x, phi, alpha, s); }, {}, center, std::sqrt(s / 2.0));
    CHECK(std::abs(total - 1.0) < 1e-9);
  }
}
