#include <doctest.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "qdensity/error.hpp"
#include "qdensity/resampler.hpp"
#include "qdensity/simulation.hpp"

using namespace qdensity;

namespace {

StepCdf ecdf_1234() {
  return km_fit(SurvivalSample::from_records({{1, true}, {2, true}, {3, true}, {4, true}}));
}

// Composite Simpson on each smooth piece of u -> u (F(q + u/sqrt n) - F(q)) phi_sigma(u),
// split at the jump locations, over [-8 sigma, 8 sigma].
double quadrature_oracle(const StepCdf& curve, double q_hat, double sigma, std::size_t n) {
  const double root_n = std::sqrt(static_cast<double>(n));
  const double lo = -8.0 * sigma;
  const double hi = 8.0 * sigma;
  std::vector<double> cuts{lo};
  for (double t : curve.jump_times()) {
    const double u = root_n * (t - q_hat);
    if (u > lo && u < hi) cuts.push_back(u);
  }
  cuts.push_back(hi);
  const double centre = curve(q_hat);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k];
    const double b = cuts[k + 1];
    const double level = curve(q_hat + 0.5 * (a + b) / root_n) - centre;
    const auto g = [&](double u) {
      return u * std::exp(-0.5 * u * u / (sigma * sigma)) / (sigma * std::sqrt(2 * std::numbers::pi));
    };
    constexpr int m = 2000;
    const double step = (b - a) / m;
    double s = g(a) + g(b);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * g(a + i * step);
    total += level * s * step / 3.0;
  }
  return root_n * total / (sigma * sigma);
}

}  // namespace

TEST_CASE("least squares recovers the slope of a linear response") {
  constexpr double p = 0.5;
  constexpr double slope = 0.3;
  constexpr double q_hat = 2.0;
  const auto linear = [&](double t) { return std::clamp(p + slope * (t - q_hat), 0.0, 1.0); };
  const LsEstimate est = ls_density_with(linear, q_hat, p, 10000, LsConfig{50000, 1.0, 7, 0});
  CHECK(est.value == doctest::Approx(slope).epsilon(1e-12));
}

TEST_CASE("three fixed perturbations match a hand summation") {
  const StepCdf f = ecdf_1234();
  const std::vector<double> eps{-1.0, 0.5, 2.0};
  // q_hat = 2, sqrt(n) = 2: F(1.5)=0.25, F(2.25)=0.5, F(3)=0.75
  // Y = {-0.5, 0, 0.5}; sum eps*Y = 1.5; sum eps^2 = 5.25
  CHECK(ls_from_perturbations(f, 2.0, 0.5, 4, eps) == doctest::Approx(1.5 / 5.25));

  // q_hat + eps/sqrt(n) < 0 evaluates the CDF as 0: Y = 2(0 - 0.5) = -1
  const std::vector<double> negative{-10.0};
  CHECK(ls_from_perturbations(f, 2.0, 0.5, 4, negative) == doctest::Approx(0.1));
}

TEST_CASE("ls_density validates its configuration") {
  const StepCdf f = ecdf_1234();
  CHECK_THROWS_AS(ls_density(f, 0.5, LsConfig{100, 0.0, 1, 0}), Error);
  CHECK_THROWS_AS(ls_density(f, 0.5, LsConfig{100, -1.0, 1, 0}), Error);
  CHECK_THROWS_AS(ls_density(f, 0.5, LsConfig{1, 1.0, 1, 0}), Error);
  const StepCdf plateau = km_fit(SurvivalSample::from_records({{1, true}, {2, false}}));
  try {
    ls_density(plateau, 0.75, LsConfig{100, 1.0, 1, 0});
    FAIL("expected unreachable quantile");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unreachable_quantile);
  }
}

TEST_CASE("parallel kernel agrees with the serial reference and ignores thread count") {
  ScenarioSpec spec;
  spec.n = 200;
  const SurvivalSample sample = draw_sample(spec, calibrate_censoring(spec), 3);
  const StepCdf curve = km_fit(sample);
  const LsConfig config{100000, 2.0, 99, 5};

  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const LsEstimate one = ls_density(curve, 0.5, config);
  omp_set_num_threads(4);
  const LsEstimate four = ls_density(curve, 0.5, config);
  omp_set_num_threads(saved);

  CHECK(one.value == four.value);
  CHECK(one.mc_std_error == four.mc_std_error);
  const LsEstimate serial = reference::ls_density(curve, 0.5, config);
  CHECK(serial.value == doctest::Approx(one.value).epsilon(1e-12));
  CHECK(serial.q_hat == one.q_hat);

  const LsEstimate again = ls_density(curve, 0.5, config);
  CHECK(again.value == one.value);
  LsConfig other = config;
  other.seed = 100;
  CHECK(ls_density(curve, 0.5, other).value != one.value);
}

TEST_CASE("location shift leaves the estimate unchanged") {
  ScenarioSpec spec;
  spec.n = 100;
  const SurvivalSample sample = draw_sample(spec, 0.5, 11);
  std::vector<SurvivalRecord> shifted(sample.records().begin(), sample.records().end());
  for (auto& r : shifted) r.time += 10.0;
  const LsConfig config{20000, 1.5, 5, 0};
  const LsEstimate a = ls_density(km_fit(sample), 0.5, config);
  const LsEstimate b = ls_density(km_fit(SurvivalSample::from_records(shifted)), 0.5, config);
  CHECK(b.q_hat == doctest::Approx(a.q_hat + 10.0));
  CHECK(b.value == doctest::Approx(a.value).epsilon(1e-9));
}

TEST_CASE("oracle: single jump at q_hat is a Gaussian half-moment") {
  const double q_hat = 1.0;
  const StepCdf jump({q_hat}, {1.0}, 1);
  for (double sigma : {0.5, 1.0, 3.0}) {
    for (std::size_t n : {1u, 16u, 400u}) {
      const double expected =
          std::sqrt(static_cast<double>(n)) / (sigma * std::sqrt(2.0 * std::numbers::pi));
      CHECK(conditional_expectation_oracle(jump, q_hat, sigma, n) ==
            doctest::Approx(expected).epsilon(1e-13));
    }
  }
}

TEST_CASE("oracle: a fine staircase of a linear CDF gives its slope") {
  constexpr double slope = 0.05;
  std::vector<double> t, v;
  for (int k = 1; k <= 200000; ++k) {
    t.push_back(k * 1e-4);
    v.push_back(std::min(1.0, slope * k * 1e-4));
  }
  const StepCdf stairs(std::move(t), std::move(v), 1);
  CHECK(conditional_expectation_oracle(stairs, 10.0, 1.0, 1) ==
        doctest::Approx(slope).epsilon(1e-3));
}

TEST_CASE("oracle matches piecewise quadrature") {
  const StepCdf f = ecdf_1234();
  CHECK(conditional_expectation_oracle(f, 2.0, 1.0, 4) ==
        doctest::Approx(quadrature_oracle(f, 2.0, 1.0, 4)).epsilon(1e-8));

  ScenarioSpec spec;
  spec.n = 60;
  const StepCdf km = km_fit(draw_sample(spec, 0.4, 2));
  const double q = quantile(km, 0.5).q_hat;
  for (double sigma : {0.3, 1.0, 2.5}) {
    const double closed = conditional_expectation_oracle(km, q, sigma, 60);
    CHECK(closed == doctest::Approx(quadrature_oracle(km, q, sigma, 60)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(conditional_expectation_oracle(f, 2.0, 0.0, 4), Error);
}

TEST_CASE("large-B estimate approaches the conditional expectation") {
  ScenarioSpec spec;
  spec.n = 100;
  spec.target_censoring = 0.25;
  const StepCdf km = km_fit(draw_sample(spec, calibrate_censoring(spec), 4));
  const LsEstimate est = ls_density(km, 0.5, LsConfig{400000, 2.0, 17, 0});
  const double limit = conditional_expectation_oracle(km, est.q_hat, 2.0, 100);
  CHECK(std::abs(est.value - limit) <= 5.0 * est.mc_std_error);
  CHECK(est.mc_std_error > 0.0);
}

TEST_CASE("fixed sigma near the worked setting estimates 0.75 on average") {
  ScenarioSpec spec;
  spec.n = 200;
  spec.censoring_rate = 0.12;
  double mean = 0.0;
  constexpr int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const StepCdf km = km_fit(draw_sample(spec, 0.12, static_cast<std::size_t>(r)));
    mean += ls_density(km, 0.5, LsConfig{20000, 2.65, 3, 0}).value / reps;
  }
  CHECK(mean == doctest::Approx(0.75).epsilon(0.1));
}
