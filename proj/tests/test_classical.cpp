#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/ks.hpp"
#include "support/oracles.hpp"
#include "tpp/classical.hpp"

using namespace tpp::classical;
using tpp::numerics::integrate_or_throw;
using tpp::numerics::Tolerance;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("conditional intensities match their formulas", "[classical]") {
  const History empty{0.0, {}};
  CHECK(intensity(PoissonParams{2.0}, 3.7, empty) == 2.0);
  CHECK(intensity(PoissonParams{2.0}, 0.0, empty) == 2.0);

  const History one{0.0, {1.0}};
  CHECK(intensity(HawkesParams{1.0, 0.5, 1.0}, 2.0, one) ==
        Catch::Approx(1.0 + 0.5 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(intensity(HawkesParams{1.0, 0.5, 1.0}, 2.0, one) == Catch::Approx(1.18394).margin(1e-5));

  const History sc_hist{0.0, {0.4}};
  CHECK(intensity(SelfCorrectingParams{1.0, 0.5}, 1.0, sc_hist) ==
        Catch::Approx(std::exp(1.0 - 0.5)).epsilon(1e-12));
  CHECK(intensity(SelfCorrectingParams{1.0, 0.5}, 1.0, sc_hist) ==
        Catch::Approx(1.64872).margin(1e-5));

  CHECK_THROWS_AS(intensity(PoissonParams{2.0}, 0.5, one), std::domain_error);
}

TEST_CASE("next-event pdf and cdf", "[classical]") {
  const History one{0.0, {1.0}};

  const auto poisson = next_event_pdf_cdf(PoissonParams{2.0}, 2.0, one);
  CHECK(poisson.cumulative == Catch::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
  CHECK(poisson.cumulative == Catch::Approx(0.86466).margin(1e-5));
  CHECK(poisson.density == Catch::Approx(2.0 * std::exp(-2.0)).epsilon(1e-12));
  CHECK(poisson.density == Catch::Approx(0.27067).margin(1e-5));

  // F*(t_j) = 0 for every family.
  CHECK(next_event_pdf_cdf(PoissonParams{2.0}, 1.0, one).cumulative == 0.0);
  CHECK(next_event_pdf_cdf(HawkesParams{1.0, 0.5, 1.0}, 1.0, one).cumulative == 0.0);
  CHECK(next_event_pdf_cdf(SelfCorrectingParams{1.0, 0.5}, 1.0, one).cumulative == 0.0);

  // Hawkes with one event exactly at t_j, checked against quadrature of the
  // intensity and against the closed form.
  const HawkesParams hp{1.0, 0.5, 1.0};
  const auto hawkes = next_event_pdf_cdf(hp, 2.0, one);
  const double expected = 1.0 - std::exp(-(1.0 + 0.5 * (1.0 - std::exp(-1.0))));
  CHECK(hawkes.cumulative == Catch::Approx(expected).epsilon(1e-12));
  const double quad_comp = integrate_or_throw(
      [&](double u) {
        return hp.lambda + hp.alpha * std::exp(-hp.gamma * (u - 1.0));  // event at t_j = 1
      },
      1.0, 2.0, Tolerance{1e-12, 1e-12, 2000});
  CHECK(hawkes.cumulative == Catch::Approx(1.0 - std::exp(-quad_comp)).epsilon(1e-10));
}

TEST_CASE("densities are normalized and consistent with their cdf", "[classical]") {
  tpp::Rng rng(321);
  for (int trial = 0; trial < 8; ++trial) {
    History hist{0.0, {}};
    double t = 0.0;
    const int n_events = 1 + static_cast<int>(rng.integer(4));
    for (int i = 0; i < n_events; ++i) {
      t += rng.uniform(0.2, 1.5);
      hist.event_times.push_back(t);
    }
    std::vector<ClassicalModel> models = {
        PoissonParams{rng.uniform(0.4, 3.0)},
        HawkesParams{rng.uniform(0.4, 2.0), rng.uniform(0.1, 1.0), rng.uniform(0.5, 2.0)},
        SelfCorrectingParams{rng.uniform(0.3, 1.5), rng.uniform(0.1, 0.8)}};
    for (const auto& model : models) {
      const double t_j = hist.last_time();
      // f*(t) >= 0 and integrates to one over (t_j, inf).
      const double mass = integrate_or_throw(
          [&](double dt) {
            const double f = next_event_pdf_cdf(model, t_j + dt, hist).density;
            REQUIRE(f >= 0.0);
            return f;
          },
          0.0, kInf, Tolerance{1e-10, 1e-9, 6000});
      CHECK(mass == Catch::Approx(1.0).margin(1e-6));

      // F nondecreasing from zero.
      CHECK(next_event_pdf_cdf(model, t_j, hist).cumulative == 0.0);
      double prev = 0.0;
      for (int k = 1; k <= 12; ++k) {
        const double cur = next_event_pdf_cdf(model, t_j + 0.4 * k, hist).cumulative;
        CHECK(cur >= prev);
        prev = cur;
      }

      // dF/dt = f at random points.
      for (int k = 0; k < 20; ++k) {
        const double dt = rng.uniform(0.01, 3.0);
        const double h = 1e-6;
        const double fd = (next_event_pdf_cdf(model, t_j + dt + h, hist).cumulative -
                           next_event_pdf_cdf(model, t_j + dt - h, hist).cumulative) /
                          (2.0 * h);
        const double f = next_event_pdf_cdf(model, t_j + dt, hist).density;
        CHECK(std::abs(fd - f) <= 1e-5 * std::max(1.0, std::abs(f)));
      }
    }
  }
}

TEST_CASE("validate_intensity separates valid and invalid intensities", "[classical]") {
  const std::vector<double> horizons = {1, 2, 4, 8, 16, 32};

  const auto poisson = validate_intensity([](double) { return 1.0; }, 0.0, horizons);
  CHECK(poisson.valid);
  CHECK(poisson.positive);
  CHECK(poisson.diverges);
  CHECK(poisson.cdf_reaches_one);

  // Exponentially decaying intensity (negative time slope): the compensator
  // plateaus at 1, so the cdf saturates at 1 - e^{-1}.
  const auto decaying = validate_intensity([](double t) { return std::exp(-t); }, 0.0, horizons);
  CHECK_FALSE(decaying.valid);
  CHECK(decaying.positive);
  CHECK_FALSE(decaying.diverges);
  CHECK(decaying.cdf_at_last == Catch::Approx(1.0 - std::exp(-1.0)).margin(1e-9));
  CHECK(decaying.cdf_at_last == Catch::Approx(0.63212).margin(1e-5));
  CHECK_FALSE(decaying.cdf_reaches_one);

  // Exponentially growing intensity is valid.
  const std::vector<double> short_horizons = {1, 2, 4, 8};
  const auto growing =
      validate_intensity([](double t) { return std::exp(t); }, 0.0, short_horizons);
  CHECK(growing.valid);

  CHECK_THROWS_AS(validate_intensity([](double) { return 1.0; }, 0.0, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_intensity([](double) { return 1.0; }, 0.0, {2.0, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("thinning reproduces the Poisson count distribution", "[classical][sim]") {
  const ClassicalModel model = PoissonParams{2.0};
  double total = 0.0;
  const int runs = 1000;
  for (int seed = 0; seed < runs; ++seed)
    total += static_cast<double>(sample_thinning(model, 0.0, 100.0, seed).size());
  const double mean = total / runs;
  const double se = std::sqrt(200.0 / runs);
  CHECK(std::abs(mean - 200.0) <= 3.0 * se);

  // Determinism and ordering.
  const auto a = sample_thinning(model, 0.0, 100.0, 7);
  const auto b = sample_thinning(model, 0.0, 100.0, 7);
  CHECK(a == b);
  for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i] > a[i - 1]);
}

TEST_CASE("thinning Hawkes degenerates to Poisson as alpha -> 0", "[classical][sim]") {
  const auto hawkes = sample_thinning(HawkesParams{1.5, 1e-9, 1.0}, 0.0, 3000.0, 11);
  const auto poisson = sample_thinning(PoissonParams{1.5}, 0.0, 3000.0, 12);
  auto gaps = [](const std::vector<double>& ts) {
    std::vector<double> g;
    for (std::size_t i = 1; i < ts.size(); ++i) g.push_back(ts[i] - ts[i - 1]);
    return g;
  };
  CHECK(ks::two_sample_p(gaps(hawkes), gaps(poisson)) > 0.01);
}

TEST_CASE("thinning Hawkes matches the branching-ratio mean count", "[classical][sim]") {
  const ClassicalModel model = HawkesParams{0.5, 0.8, 1.2};
  double total = 0.0;
  const int runs = 40;
  for (int seed = 0; seed < runs; ++seed)
    total += static_cast<double>(sample_thinning(model, 0.0, 1000.0, 100 + seed).size());
  const double mean = total / runs;
  const double expected = 0.5 * 1000.0 / (1.0 - 0.8 / 1.2);
  CHECK(std::abs(mean - expected) <= 0.10 * expected);
}

TEST_CASE("thinning time-rescaling yields unit exponential gaps", "[classical][sim]") {
  const ClassicalModel model = HawkesParams{1.0, 0.6, 1.5};
  const auto times = sample_thinning(model, 0.0, 2500.0, 5);
  REQUIRE(times.size() > 2000);
  std::vector<double> rescaled;
  History hist{0.0, {}};
  for (double t : times) {
    rescaled.push_back(compensator(model, t, hist));
    hist.event_times.push_back(t);
  }
  const double p = ks::one_sample_p(rescaled, [](double z) { return 1.0 - std::exp(-z); });
  CHECK(p > 0.01);
}

TEST_CASE("generic thinning requires an upper bound", "[classical][sim]") {
  CHECK_THROWS_AS(sample_thinning_fn([](double, const std::vector<double>&) { return 1.0; },
                                     nullptr, 0.0, 1.0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_thinning(PoissonParams{1.0}, 1.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("Poisson MLE is the closed form n/T", "[classical][fit]") {
  const std::vector<History> data = {{0.0, {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}},
                                     {0.0, {0.5, 1.0, 1.5, 2.0}}};
  const auto fit = fit_mle(data, Family::poisson);
  CHECK(std::get<PoissonParams>(fit.model).lambda == 2.0);  // 10 events over 5 time units
  CHECK(fit.converged);

  CHECK_THROWS_AS(fit_mle({History{0.0, {}}}, Family::poisson), std::invalid_argument);
  CHECK_THROWS_AS(fit_mle({}, Family::hawkes), std::invalid_argument);
}

TEST_CASE("analytic likelihood gradients match finite differences", "[classical][fit]") {
  tpp::Rng rng(9);
  std::vector<History> data;
  for (int s = 0; s < 3; ++s) {
    History h{0.0, {}};
    double t = 0.0;
    for (int i = 0; i < 25; ++i) {
      t += rng.uniform(0.05, 1.0);
      h.event_times.push_back(t);
    }
    data.push_back(h);
  }

  {
    const HawkesParams p{0.8, 0.5, 1.3};
    const auto lg = detail::hawkes_ll_grad(p, data);
    CHECK(lg.ll == Catch::Approx(log_likelihood(p, data)).epsilon(1e-12));
    const double h = 1e-6;
    auto ll_at = [&](double l, double a, double g) {
      return log_likelihood(HawkesParams{l, a, g}, data);
    };
    CHECK(lg.grad[0] ==
          Catch::Approx((ll_at(p.lambda + h, p.alpha, p.gamma) -
                         ll_at(p.lambda - h, p.alpha, p.gamma)) / (2 * h)).epsilon(1e-5));
    CHECK(lg.grad[1] ==
          Catch::Approx((ll_at(p.lambda, p.alpha + h, p.gamma) -
                         ll_at(p.lambda, p.alpha - h, p.gamma)) / (2 * h)).epsilon(1e-5));
    CHECK(lg.grad[2] ==
          Catch::Approx((ll_at(p.lambda, p.alpha, p.gamma + h) -
                         ll_at(p.lambda, p.alpha, p.gamma - h)) / (2 * h)).epsilon(1e-5));
  }
  {
    const SelfCorrectingParams p{1.1, 0.4};
    const auto lg = detail::self_correcting_ll_grad(p, data);
    CHECK(lg.ll == Catch::Approx(log_likelihood(p, data)).epsilon(1e-12));
    const double h = 1e-7;
    auto ll_at = [&](double m, double a) {
      return log_likelihood(SelfCorrectingParams{m, a}, data);
    };
    CHECK(lg.grad[0] == Catch::Approx((ll_at(p.mu + h, p.alpha) - ll_at(p.mu - h, p.alpha)) /
                                      (2 * h)).epsilon(1e-4));
    CHECK(lg.grad[1] == Catch::Approx((ll_at(p.mu, p.alpha + h) - ll_at(p.mu, p.alpha - h)) /
                                      (2 * h)).epsilon(1e-4));
  }
}

TEST_CASE("Hawkes simulate-and-recover", "[classical][fit][slow]") {
  const HawkesParams truth{0.5, 0.8, 1.2};
  std::vector<History> data;
  for (int seed = 0; seed < 80; ++seed)
    data.push_back({0.0, sample_thinning(truth, 0.0, 400.0, 2000 + seed)});
  const auto fit = fit_mle(data, Family::hawkes);
  const auto& p = std::get<HawkesParams>(fit.model);
  CHECK(std::abs(p.lambda - truth.lambda) <= 0.15 * truth.lambda);
  CHECK(std::abs(p.alpha - truth.alpha) <= 0.15 * truth.alpha);
  CHECK(std::abs(p.gamma - truth.gamma) <= 0.15 * truth.gamma);
  // Optimizer optimality on the training objective.
  CHECK(fit.log_lik >= log_likelihood(truth, data) - 1e-6);
}

TEST_CASE("self-correcting simulate-and-recover", "[classical][fit][slow]") {
  const SelfCorrectingParams truth{1.0, 0.5};
  std::vector<History> data;
  for (int seed = 0; seed < 60; ++seed)
    data.push_back({0.0, sample_thinning(truth, 0.0, 200.0, 3000 + seed)});
  const auto fit = fit_mle(data, Family::self_correcting);
  const auto& p = std::get<SelfCorrectingParams>(fit.model);
  CHECK(std::abs(p.mu - truth.mu) <= 0.15 * truth.mu);
  CHECK(std::abs(p.alpha - truth.alpha) <= 0.15 * truth.alpha);
  CHECK(fit.log_lik >= log_likelihood(truth, data) - 1e-6);
}

TEST_CASE("expected next time", "[classical]") {
  const History one{0.0, {1.0}};
  CHECK(expected_next_time(PoissonParams{2.0}, one) == Catch::Approx(1.5).epsilon(1e-12));
  CHECK(expected_next_time(PoissonParams{1.0}, one) == Catch::Approx(2.0).epsilon(1e-12));

  // Dual-quadrature oracle: the library integrates dt * f(dt); the oracle uses
  // the survival-function route E[dt] = integral of exp(-Lambda(dt)).
  const ClassicalModel hawkes = HawkesParams{1.0, 0.5, 1.0};
  const double lib = expected_next_time(hawkes, one);
  const double orc =
      1.0 + oracle::simpson_semi_infinite(
                [&](double dt) {
                  return 1.0 - next_event_pdf_cdf(hawkes, 1.0 + dt, one).cumulative;
                },
                0.0, 1e-11);
  CHECK(lib == Catch::Approx(orc).epsilon(1e-6));

  const ClassicalModel sc = SelfCorrectingParams{0.8, 0.4};
  const double lib_sc = expected_next_time(sc, one);
  const double orc_sc =
      1.0 + oracle::simpson_semi_infinite(
                [&](double dt) { return 1.0 - next_event_pdf_cdf(sc, 1.0 + dt, one).cumulative; },
                0.0, 1e-11);
  CHECK(lib_sc == Catch::Approx(orc_sc).epsilon(1e-6));
}
