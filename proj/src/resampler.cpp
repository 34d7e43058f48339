#include "qdensity/resampler.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace qdensity {

void LsConfig::validate() const {
  if (resamples < 2) throw Error(ErrorCode::invalid_config, "number of resamples B must be >= 2");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    std::ostringstream msg;
    msg << "sigma must be positive and finite, got " << sigma;
    throw Error(ErrorCode::invalid_config, msg.str());
  }
}

double LsSums::std_error() const noexcept {
  // residual r_b = eps_b*Y_b - f*eps_b^2; Var(f) ~ sum r_b^2 / (sum eps_b^2)^2
  const double f = slope();
  const double rss = xyxy.sum - 2.0 * f * xxxy.sum + f * f * xxxx.sum;
  return std::sqrt(std::max(rss, 0.0)) / xx.sum;
}

LsEstimate ls_density(const StepCdf& curve, double p, const LsConfig& config) {
  config.validate();
  const QuantileEstimate q = quantile(curve, p);
  return ls_density_with(curve, q.q_hat, p, curve.sample_size(), config);
}

double conditional_expectation_oracle(const StepCdf& curve, double q_hat, double sigma,
                                      std::size_t n) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error(ErrorCode::invalid_config, "sigma must be positive and finite");
  if (n == 0) throw Error(ErrorCode::invalid_input, "sample size must be positive");

  // On u in [a_k, a_{k+1}) the CDF is the constant v_k, with
  // a_k = sqrt(n)(t_k - q_hat). Each piece contributes
  //   (v_k - F(q_hat)) * int_{a_k}^{a_{k+1}} u phi_sigma(u) du
  //   = (v_k - F(q_hat)) * sigma^2 (phi_sigma(a_k) - phi_sigma(a_{k+1})),
  // so the sigma^2 cancels against the normalisation.
  const double root_n = std::sqrt(static_cast<double>(n));
  const auto density = [sigma](double u) {
    if (std::isinf(u)) return 0.0;
    const double z = u / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
  };

  const double centre = curve(q_hat);
  const auto jumps = curve.jump_times();
  const auto values = curve.post_jump_values();

  double total = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  double level = 0.0;
  for (std::size_t k = 0; k <= jumps.size(); ++k) {
    const double upper = k < jumps.size() ? root_n * (jumps[k] - q_hat)
                                          : std::numeric_limits<double>::infinity();
    total += (level - centre) * (density(lower) - density(upper));
    if (k < jumps.size()) {
      lower = upper;
      level = values[k];
    }
  }
  return root_n * total;
}

namespace reference {

LsEstimate ls_density(const StepCdf& curve, double p, const LsConfig& config) {
  config.validate();
  const QuantileEstimate q = quantile(curve, p);
  const rng::CounterStream stream(config.seed, config.stream);
  const double root_n = std::sqrt(static_cast<double>(curve.sample_size()));

  LsSums sums;
  for (std::size_t b = 0; b < config.resamples; ++b) {
    const double eps = config.sigma * stream.normal(b);
    sums.add(eps, root_n * (curve(q.q_hat + eps / root_n) - p));
  }
  return LsEstimate{sums.slope(), q.q_hat, p, config, sums.std_error()};
}

}  // namespace reference

}  // namespace qdensity
