#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qdensity/error.hpp"
#include "qdensity/simulation.hpp"

using namespace qdensity;

TEST_CASE("true density at the quantile") {
  ScenarioSpec spec;
  spec.survival = Exponential{1.5};
  CHECK(true_density_at_quantile(spec) == doctest::Approx(0.75));
  spec.survival = Exponential{0.12};
  CHECK(true_density_at_quantile(spec) == doctest::Approx(0.06));
  spec.survival = Cauchy{0.0, 1.0};
  CHECK(true_density_at_quantile(spec) == doctest::Approx(1.0 / std::numbers::pi));
  CHECK(true_quantile(spec) == doctest::Approx(0.0));
  spec.survival = Exponential{1.5};
  CHECK(true_quantile(spec) == doctest::Approx(std::log(2.0) / 1.5));
}

TEST_CASE("exponential censoring calibration") {
  ScenarioSpec spec;
  spec.survival = Exponential{1.5};
  spec.target_censoring = 0.40;
  CHECK(calibrate_censoring(spec) == doctest::Approx(1.0));
  spec.target_censoring = 0.25;
  CHECK(calibrate_censoring(spec) == doctest::Approx(0.5));
  spec.target_censoring = 0.0;
  CHECK(calibrate_censoring(spec) == 0.0);
  spec.target_censoring = 0.99;
  CHECK_THROWS_AS(calibrate_censoring(spec), Error);
}

TEST_CASE("Cauchy censoring calibration hits its target") {
  ScenarioSpec spec;
  spec.survival = Cauchy{0.0, 1.0};
  for (double target : {0.1, 0.25, 0.4}) {
    spec.target_censoring = target;
    const double rate = calibrate_censoring(spec);
    CHECK(censoring_probability(spec.survival, rate) == doctest::Approx(target).epsilon(1e-6));
  }
  // at most half of Cauchy times are positive, so 0.6 is unreachable
  spec.target_censoring = 0.6;
  try {
    calibrate_censoring(spec);
    FAIL("expected calibration failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::calibration_failure);
  }
}

TEST_CASE("Cauchy censoring probability agrees with a Monte-Carlo count") {
  ScenarioSpec spec;
  spec.survival = Cauchy{0.0, 1.0};
  spec.n = 100000;
  const double rate = 0.8;
  const SurvivalSample s = draw_sample(spec, rate, 0);
  const double realized =
      1.0 - static_cast<double>(s.event_count()) / static_cast<double>(s.size());
  CHECK(std::abs(realized - censoring_probability(spec.survival, rate)) < 0.01);
}

TEST_CASE("realized exponential censoring is within 1% of target") {
  ScenarioSpec spec;
  spec.n = 100000;
  for (double target : {0.1, 0.25, 0.4}) {
    spec.target_censoring = target;
    const SurvivalSample s = draw_sample(spec, calibrate_censoring(spec), 9);
    const double realized =
        1.0 - static_cast<double>(s.event_count()) / static_cast<double>(s.size());
    CHECK(std::abs(realized - target) <= 0.01);
  }
}

TEST_CASE("draw_sample is keyed by (seed, replicate)") {
  ScenarioSpec spec;
  spec.n = 50;
  const SurvivalSample a = draw_sample(spec, 0.3, 4);
  const SurvivalSample b = draw_sample(spec, 0.3, 4);
  const SurvivalSample c = draw_sample(spec, 0.3, 5);
  CHECK(std::ranges::equal(a.records(), b.records()));
  CHECK_FALSE(std::ranges::equal(a.records(), c.records()));
  spec.survival = Cauchy{};
  const SurvivalSample neg = draw_sample(spec, 0.3, 0);
  CHECK(neg.domain() == TimeDomain::finite);
  CHECK(neg.records().front().time < 0.0);
}

TEST_CASE("error summary: bias^2 + variance = mse") {
  const std::vector<double> est{0.7, 0.9, 0.65, 0.81, 0.77};
  const ErrorSummary s = summarize_errors(est, 0.75);
  CHECK(s.bias * s.bias + s.variance == doctest::Approx(s.mse).epsilon(1e-14));
  const std::vector<double> one{0.8};
  const ErrorSummary single = summarize_errors(one, 0.75);
  CHECK(single.variance == 0.0);
  CHECK(single.mse == doctest::Approx(single.bias * single.bias));
  CHECK_THROWS_AS(summarize_errors({}, 0.75), Error);
}

TEST_CASE("run_comparison single replicate smoke run") {
  ScenarioSpec spec;
  spec.n = 50;
  spec.replications = 1;
  spec.resamples = 200;
  const ComparisonResult r = run_comparison(spec, SigmaSelector{}, KdeConfig{});
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].method == Method::ls);
  CHECK(r.rows[1].method == Method::kde);
  for (const auto& row : r.rows) {
    CHECK(row.variance == 0.0);
    CHECK(row.mse == doctest::Approx(row.bias * row.bias));
    CHECK(row.n == 50);
  }
  CHECK(r.used_replicates == 1);
  CHECK(r.excluded_replicates == 0);
  CHECK(r.selected_sigmas.size() == 1);
}

TEST_CASE("run_comparison records replicates with an unreachable quantile") {
  ScenarioSpec spec;
  spec.n = 5;
  spec.p = 0.9;
  spec.target_censoring = 0.9;
  spec.replications = 30;
  spec.resamples = 50;
  SigmaSelector fixed;
  fixed.fixed_sigma = 1.0;
  try {
    const ComparisonResult r = run_comparison(spec, fixed, KdeConfig{{0.1, 0.5}});
    CHECK(r.excluded_replicates > 0);
    CHECK(r.used_replicates + r.excluded_replicates == 30);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unreachable_quantile);
  }
}

TEST_CASE("mse curve points follow the grid") {
  ScenarioSpec spec;
  spec.n = 50;
  spec.replications = 4;
  spec.resamples = 500;
  spec.censoring_rate = 0.12;
  const SigmaGrid grid = SigmaGrid::arithmetic(0.5, 3.0, 0.5);
  const MseCurve c = mse_curve(spec, grid);
  REQUIRE(c.points.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(c.points[i].sigma == grid[i]);
    CHECK(c.points[i].mse >= 0.0);
  }
  const std::vector<MseCurvePoint> pts{{1, 4.0}, {2, 1.0}, {3, 1.5}, {4, 2.0}, {5, 2.5}};
  CHECK(plateau_width(pts, 2.0) == 3);
}
