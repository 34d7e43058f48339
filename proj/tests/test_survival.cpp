#include <doctest.h>

#include <algorithm>
#include <random>

#include "qdensity/error.hpp"
#include "qdensity/survival.hpp"

using namespace qdensity;

namespace {

SurvivalSample make(std::vector<double> t, std::vector<bool> d) {
  std::vector<SurvivalRecord> r;
  for (std::size_t i = 0; i < t.size(); ++i) r.push_back({t[i], d[i]});
  return SurvivalSample::from_records(std::move(r));
}

// Direct product-limit survival at t, straight from the definition.
double km_survival_oracle(const std::vector<SurvivalRecord>& records, double t) {
  std::vector<double> times;
  for (const auto& r : records)
    if (r.event && r.time <= t) times.push_back(r.time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  double s = 1.0;
  for (double tj : times) {
    double d = 0, at_risk = 0;
    for (const auto& r : records) {
      if (r.time >= tj) ++at_risk;
      if (r.time == tj && r.event) ++d;
    }
    s *= 1.0 - d / at_risk;
  }
  return s;
}

}  // namespace

TEST_CASE("km_fit on uncensored data is the ECDF") {
  const StepCdf f = km_fit(make({1, 2, 3}, {true, true, true}));
  REQUIRE(f.jump_times().size() == 3);
  CHECK(f.post_jump_values()[0] == 1.0 / 3.0);
  CHECK(f.post_jump_values()[1] == 2.0 / 3.0);
  CHECK(f.post_jump_values()[2] == 1.0);
  CHECK(f.reaches_one());
}

TEST_CASE("km_fit with a censored middle observation") {
  const StepCdf f = km_fit(make({1, 2, 3}, {true, false, true}));
  CHECK(cdf_eval(f, 1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(cdf_eval(f, 2.5) == doctest::Approx(1.0 / 3.0));
  CHECK(cdf_eval(f, 3.0) == 1.0);
  CHECK(f.reaches_one());
}

TEST_CASE("km_fit leaves a plateau when the maximum is censored") {
  const StepCdf f = km_fit(make({1, 2}, {true, false}));
  CHECK(cdf_eval(f, 5.0) == 0.5);
  CHECK_FALSE(f.reaches_one());
}

TEST_CASE("km_fit_censoring flips the indicators") {
  const StepCdf g = km_fit_censoring(make({1, 2, 3}, {true, false, true}));
  REQUIRE(g.jump_times().size() == 1);
  CHECK(g.jump_times()[0] == 2.0);
  // risk set at t=2 is {2,3}: censoring CDF jumps to 1/2
  CHECK(g.post_jump_values()[0] == doctest::Approx(0.5));

  const StepCdf none = km_fit_censoring(make({1, 2, 3}, {true, true, true}));
  CHECK(none.jump_times().empty());
  for (double t : {1.0, 2.0, 3.0}) CHECK(1.0 - none.left_limit(t) == 1.0);

  const StepCdf all = km_fit_censoring(make({1, 2}, {false, false}));
  CHECK(all.post_jump_values()[0] == 0.5);
  CHECK(all.post_jump_values()[1] == 1.0);
}

TEST_CASE("events precede censorings at tied times") {
  // At t=2 one event and one censoring: both are at risk for the event.
  const StepCdf f = km_fit(make({1, 2, 2, 3}, {true, true, false, true}));
  const double expected = 1.0 - km_survival_oracle({{1, true}, {2, true}, {2, false}, {3, true}}, 2.0);
  CHECK(cdf_eval(f, 2.0) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(cdf_eval(f, 2.0) == doctest::Approx(0.5));
}

TEST_CASE("cdf_eval is right-continuous and flat outside the support") {
  const StepCdf f = km_fit(make({1, 2, 3}, {true, true, true}));
  CHECK(cdf_eval(f, -5.0) == 0.0);
  CHECK(cdf_eval(f, 2.0) == 2.0 / 3.0);
  CHECK(cdf_eval(f, 1.999) == 1.0 / 3.0);
  CHECK(cdf_eval(f, 100.0) == 1.0);
  CHECK(f.left_limit(2.0) == 1.0 / 3.0);
}

TEST_CASE("quantile examples") {
  const StepCdf ecdf = km_fit(make({1, 2, 3, 4}, {true, true, true, true}));
  CHECK(quantile(ecdf, 0.5).q_hat == 2.0);

  const StepCdf censored = km_fit(make({1, 2, 3}, {true, false, true}));
  CHECK(quantile(censored, 0.5).q_hat == 3.0);

  const StepCdf plateau = km_fit(make({1, 2}, {true, false}));
  CHECK(plateau.max_value() == 0.5);
  try {
    quantile(plateau, 0.75);
    FAIL("expected an unreachable-quantile error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unreachable_quantile);
  }
  CHECK_THROWS_AS(quantile(ecdf, 0.0), Error);
  CHECK_THROWS_AS(quantile(ecdf, 1.0), Error);
}

TEST_CASE("sample construction rejects bad input") {
  CHECK_THROWS_AS(SurvivalSample::from_records({}), Error);
  CHECK_THROWS_AS(make({1, -1}, {true, true}), Error);
  CHECK_THROWS_AS(make({1, 0}, {true, true}), Error);
  CHECK_THROWS_AS(make({1, std::numeric_limits<double>::infinity()}, {true, true}), Error);
  CHECK_NOTHROW(SurvivalSample::from_records({{-1.0, true}, {0.0, false}}, TimeDomain::finite));
  CHECK_THROWS_AS(
      SurvivalSample::from_records({{std::nan(""), true}}, TimeDomain::finite), Error);
}

TEST_CASE("km_fit handles negative times in the finite domain") {
  const auto s = SurvivalSample::from_records({{-2.0, true}, {-1.0, false}, {0.5, true}},
                                              TimeDomain::finite);
  const StepCdf f = km_fit(s);
  CHECK(cdf_eval(f, -3.0) == 0.0);
  CHECK(cdf_eval(f, -2.0) == doctest::Approx(1.0 / 3.0));
  CHECK(cdf_eval(f, 0.5) == 1.0);
}

TEST_CASE("property: km_fit matches the product-limit definition, is permutation invariant "
          "and monotone") {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> size(1, 40);
  std::uniform_int_distribution<int> tick(1, 15);  // coarse times force ties
  std::bernoulli_distribution event(0.7);

  for (int trial = 0; trial < 300; ++trial) {
    std::vector<SurvivalRecord> records(static_cast<std::size_t>(size(gen)));
    for (auto& r : records) r = {0.5 * tick(gen), event(gen)};
    const StepCdf f = km_fit(SurvivalSample::from_records(records));

    auto shuffled = records;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    const StepCdf g = km_fit(SurvivalSample::from_records(shuffled));
    CHECK(std::ranges::equal(f.jump_times(), g.jump_times()));
    CHECK(std::ranges::equal(f.post_jump_values(), g.post_jump_values()));

    double previous = 0.0;
    for (double t = -1.0; t <= 9.0; t += 0.25) {
      const double v = cdf_eval(f, t);
      CHECK(v >= previous);
      CHECK(v == doctest::Approx(1.0 - km_survival_oracle(records, t)).epsilon(1e-12));
      previous = v;
    }

    for (double p : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      if (f.max_value() < p) continue;
      const QuantileEstimate q = quantile(f, p);
      CHECK(cdf_eval(f, q.q_hat) >= p);
      for (double t : f.jump_times())
        if (t < q.q_hat) CHECK(cdf_eval(f, t) < p);
    }
  }
}
