#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qdensity/error.hpp"
#include "qdensity/rng.hpp"
#include "qdensity/survival.hpp"

namespace qdensity {

// Resampling parameters: B perturbations eps_b ~ N(0, sigma^2). The draws
// are keyed by (seed, stream, b); grid searches use one stream per grid point.
struct LsConfig {
  std::size_t resamples = 100000;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  // Throws Error(invalid_config) unless resamples >= 2 and sigma > 0.
  void validate() const;
};

struct LsEstimate {
  double value = 0.0;
  double q_hat = 0.0;
  double p = 0.0;
  LsConfig config;
  // Delta-method standard error of the ratio over the B resamples
  // (Monte-Carlo noise only, conditional on the data).
  double mc_std_error = 0.0;
};

// Running sums needed for the slope estimate and its Monte-Carlo error.
// All accumulators are compensated.
struct LsSums {
  struct Kahan {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) noexcept {
      const double y = x - carry;
      const double t = sum + y;
      carry = (t - sum) - y;
      sum = t;
    }
  };

  Kahan xy, xx, xyxy, xxxy, xxxx;
  std::size_t count = 0;

  void add(double eps, double response) noexcept {
    const double e2 = eps * eps;
    const double ey = eps * response;
    xy.add(ey);
    xx.add(e2);
    xyxy.add(ey * ey);
    xxxy.add(e2 * ey);
    xxxx.add(e2 * e2);
    ++count;
  }

  void merge(const LsSums& other) noexcept {
    xy.add(other.xy.sum);
    xx.add(other.xx.sum);
    xyxy.add(other.xyxy.sum);
    xxxy.add(other.xxxy.sum);
    xxxx.add(other.xxxx.sum);
    count += other.count;
  }

  double slope() const noexcept { return xy.sum / xx.sum; }
  double std_error() const noexcept;
};

namespace detail {

// Resamples per work unit. Partial sums are formed per chunk and folded in
// chunk order, so the result does not depend on the number of threads.
inline constexpr std::size_t kChunk = 4096;

template <class Cdf>
LsSums accumulate_chunk(const Cdf& cdf, double q_hat, double p, double root_n,
                        const LsConfig& config, const rng::CounterStream& stream,
                        std::size_t begin, std::size_t end) {
  LsSums sums;
  for (std::size_t b = begin; b < end; ++b) {
    const double eps = config.sigma * stream.normal(b);
    sums.add(eps, root_n * (cdf(q_hat + eps / root_n) - p));
  }
  return sums;
}

template <class Cdf>
LsSums accumulate_parallel(const Cdf& cdf, double q_hat, double p, std::size_t n,
                           const LsConfig& config) {
  const rng::CounterStream stream(config.seed, config.stream);
  const double root_n = std::sqrt(static_cast<double>(n));
  const std::size_t chunks = (config.resamples + kChunk - 1) / kChunk;
  std::vector<LsSums> partial(chunks);

  const auto chunk_count = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static) if (chunks > 1)
  for (std::ptrdiff_t c = 0; c < chunk_count; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(begin + kChunk, config.resamples);
    partial[static_cast<std::size_t>(c)] =
        accumulate_chunk(cdf, q_hat, p, root_n, config, stream, begin, end);
  }

  LsSums total;
  for (const auto& part : partial) total.merge(part);
  return total;
}

}  // namespace detail

// Least-squares slope of Y_b = sqrt(n)(cdf(q_hat + eps_b/sqrt(n)) - p) on
// eps_b, for an arbitrary CDF-like callable. No intercept.
template <class Cdf>
LsEstimate ls_density_with(const Cdf& cdf, double q_hat, double p, std::size_t n,
                           const LsConfig& config) {
  config.validate();
  if (n == 0) throw Error(ErrorCode::invalid_input, "sample size must be positive");
  const LsSums sums = detail::accumulate_parallel(cdf, q_hat, p, n, config);
  return LsEstimate{sums.slope(), q_hat, p, config, sums.std_error()};
}

// Same estimator for an explicit list of perturbations.
template <class Cdf>
double ls_from_perturbations(const Cdf& cdf, double q_hat, double p, std::size_t n,
                             std::span<const double> perturbations) {
  const double root_n = std::sqrt(static_cast<double>(n));
  LsSums sums;
  for (double eps : perturbations) sums.add(eps, root_n * (cdf(q_hat + eps / root_n) - p));
  return sums.slope();
}

// Estimate of the density at the p-quantile of `curve`. The quantile is
// recomputed from the curve; n is the curve's sample size.
LsEstimate ls_density(const StepCdf& curve, double p, const LsConfig& config);

// Limit of ls_density as B -> infinity, conditional on the data:
//   sqrt(n)/sigma^2 * int u (F(q_hat + u/sqrt(n)) - F(q_hat)) phi_sigma(u) du,
// integrated exactly over the steps of F.
double conditional_expectation_oracle(const StepCdf& curve, double q_hat, double sigma,
                                      std::size_t n);

namespace reference {

// Single-threaded, index-order accumulation of the same draws. Kept as the
// baseline for tests and benchmarks.
LsEstimate ls_density(const StepCdf& curve, double p, const LsConfig& config);

}  // namespace reference

}  // namespace qdensity
