#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "tpp/numerics.hpp"
#include "tpp/random.hpp"

using tpp::numerics::exp_integral_e1;
using tpp::numerics::exp_integral_e1_scaled;
using tpp::numerics::integrate_adaptive;
using tpp::numerics::integrate_or_throw;
using tpp::numerics::QuadratureError;
using tpp::numerics::Tolerance;

namespace {

// Quadrature oracle for E1(x): the defining integral over [1, inf).
double e1_oracle(double x) {
  // Tiny absolute floor so the relative tolerance drives refinement even for
  // values near the underflow boundary.
  return integrate_or_throw([x](double y) { return std::exp(-x * y) / y; }, 1.0,
                            std::numeric_limits<double>::infinity(),
                            Tolerance{1e-300, 1e-12, 8000});
}

}  // namespace

TEST_CASE("exp_integral_e1 reference values", "[numerics]") {
  CHECK(exp_integral_e1(1.0) == Catch::Approx(0.2193839).margin(1e-6));
  CHECK(exp_integral_e1(1.0) == Catch::Approx(e1_oracle(1.0)).epsilon(1e-10));
  CHECK(exp_integral_e1(10.0) == Catch::Approx(e1_oracle(10.0)).margin(1e-10));
  CHECK(exp_integral_e1(10.0) == Catch::Approx(4.15697e-6).margin(1e-10));
}

TEST_CASE("exp_integral_e1 decays monotonically to zero", "[numerics]") {
  double prev = exp_integral_e1(0.5);
  for (double x = 1.0; x <= 760.0; x += 7.3) {
    const double cur = exp_integral_e1(x);
    CHECK(cur >= 0.0);
    // Strictly decreasing until both sides underflow to zero.
    CHECK((cur < prev || (cur == 0.0 && prev == 0.0)));
    prev = cur;
  }
  CHECK(exp_integral_e1(800.0) == 0.0);  // underflow of the asymptotic branch
}

TEST_CASE("exp_integral_e1 rejects bad arguments", "[numerics]") {
  CHECK_THROWS_AS(exp_integral_e1(0.0), std::domain_error);
  CHECK_THROWS_AS(exp_integral_e1(-1.0), std::domain_error);
  CHECK_THROWS_AS(exp_integral_e1(std::nan("")), std::domain_error);
  CHECK_THROWS_AS(exp_integral_e1(std::numeric_limits<double>::infinity()), std::domain_error);
}

TEST_CASE("exp_integral_e1 agrees with quadrature on a log grid", "[numerics]") {
  for (int i = 0; i < 50; ++i) {
    const double x = 1e-3 * std::pow(50.0 / 1e-3, i / 49.0);
    const double impl = exp_integral_e1(x);
    const double quad = e1_oracle(x);
    CHECK(std::abs(impl - quad) <= 1e-8 * std::abs(quad));
  }
}

TEST_CASE("exp_integral_e1 satisfies its derivative recurrence", "[numerics]") {
  // d/dx E1(x) = -exp(-x)/x
  for (double x : {0.5, 1.0, 5.0}) {
    const double h = 1e-6 * std::max(1.0, x);
    const double fd = (exp_integral_e1(x + h) - exp_integral_e1(x - h)) / (2.0 * h);
    const double analytic = -std::exp(-x) / x;
    CHECK(std::abs(fd - analytic) <= 1e-5 * std::abs(analytic));
  }
}

TEST_CASE("exp_integral_e1_scaled matches e^x E1(x)", "[numerics]") {
  for (double x : {0.05, 0.3, 1.0, 4.0, 20.0, 40.0}) {
    CHECK(exp_integral_e1_scaled(x) ==
          Catch::Approx(std::exp(x) * exp_integral_e1(x)).epsilon(1e-12));
  }
  // Asymptotic sanity at large argument: e^x E1(x) ~ 1/x.
  CHECK(exp_integral_e1_scaled(1e4) == Catch::Approx(1.0 / 1e4).epsilon(1e-3));
}

TEST_CASE("integrate_adaptive handles the basic integrals", "[numerics]") {
  const auto inf = std::numeric_limits<double>::infinity();
  CHECK(integrate_or_throw([](double) { return 1.0; }, 0.0, 1.0) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(integrate_or_throw([](double t) { return std::exp(-t); }, 0.0, inf) ==
        Catch::Approx(1.0).epsilon(1e-9));
  // Mean of an Exp(2) variable: integral of 2 e^(-2t) t over [0, inf) = 0.5.
  CHECK(integrate_or_throw([](double t) { return 2.0 * std::exp(-2.0 * t) * t; }, 0.0, inf) ==
        Catch::Approx(0.5).epsilon(1e-9));
  CHECK(integrate_or_throw([](double t) { return t; }, 2.0, 2.0) == 0.0);
}

TEST_CASE("integrate_adaptive is linear", "[numerics]") {
  tpp::Rng rng(42);
  const auto inf = std::numeric_limits<double>::infinity();
  const Tolerance tol{1e-10, 1e-10, 4000};
  for (int trial = 0; trial < 10; ++trial) {
    const double c0 = rng.uniform(-2.0, 2.0), c1 = rng.uniform(-2.0, 2.0),
                 c2 = rng.uniform(-1.0, 1.0);
    const double d0 = rng.uniform(-2.0, 2.0), d1 = rng.uniform(-2.0, 2.0);
    const double ra = rng.uniform(0.5, 3.0), rb = rng.uniform(0.5, 3.0);
    auto f = [=](double t) { return (c0 + c1 * t + c2 * t * t) * std::exp(-ra * t); };
    auto g = [=](double t) { return (d0 + d1 * t) * std::exp(-rb * t); };
    const double alpha = rng.uniform(-3.0, 3.0), beta = rng.uniform(-3.0, 3.0);
    auto combo = [=](double t) { return alpha * f(t) + beta * g(t); };
    const double lhs = integrate_or_throw(combo, 0.0, inf, tol);
    const double rhs = alpha * integrate_or_throw(f, 0.0, inf, tol) +
                       beta * integrate_or_throw(g, 0.0, inf, tol);
    CHECK(std::abs(lhs - rhs) <= 10.0 * std::max(tol.abs, tol.rel * std::abs(lhs)) + 1e-12);
  }
}

TEST_CASE("integrate_adaptive agrees with an independent Simpson oracle", "[numerics]") {
  auto bumpy = [](double t) { return std::sin(3.0 * t) * std::exp(-0.7 * t) + 0.2 * t; };
  const double lib = integrate_or_throw(bumpy, 0.0, 5.0, Tolerance{1e-12, 1e-12, 4000});
  const double orc = oracle::simpson(bumpy, 0.0, 5.0, 1e-12);
  CHECK(lib == Catch::Approx(orc).epsilon(1e-9));
}

TEST_CASE("integrate_adaptive reports non-convergence with its best estimate", "[numerics]") {
  auto spike = [](double t) { return 1.0 / std::sqrt(std::abs(t - 0.3) + 1e-14); };
  const auto r = integrate_adaptive(spike, 0.0, 1.0, Tolerance{1e-14, 1e-14, 3});
  CHECK_FALSE(r.converged);
  CHECK(r.error_bound > 0.0);
  CHECK(std::isfinite(r.value));
  try {
    integrate_or_throw(spike, 0.0, 1.0, Tolerance{1e-14, 1e-14, 3});
    FAIL("expected QuadratureError");
  } catch (const QuadratureError& e) {
    CHECK(std::isfinite(e.best_estimate));
    CHECK(e.error_bound > 0.0);
  }
}

TEST_CASE("Tolerance rejects invalid settings", "[numerics]") {
  CHECK_THROWS_AS(integrate_adaptive([](double) { return 0.0; }, 0.0, 1.0,
                                     Tolerance{0.0, 1e-10, 100}),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate_adaptive([](double) { return 0.0; }, 0.0, 1.0,
                                     Tolerance{1e-10, 1e-10, 0}),
                  std::invalid_argument);
}
