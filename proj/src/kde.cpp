#include "qdensity/kde.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qdensity/error.hpp"

namespace qdensity {

namespace {

inline double std_normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

void require_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw Error(ErrorCode::invalid_input, "bandwidth must be positive and finite");
}

std::vector<double> times_of(const SurvivalSample& sample) {
  std::vector<double> times;
  times.reserve(sample.size());
  for (const auto& r : sample.records()) times.push_back(r.time);
  return times;
}

double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

}  // namespace

std::vector<double> ipcw_weights(const SurvivalSample& sample, const StepCdf& cens_curve) {
  std::vector<double> weights;
  weights.reserve(sample.size());
  for (const auto& r : sample.records()) {
    if (!r.event) {
      weights.push_back(0.0);
      continue;
    }
    // Left limit: a censoring tied with this event does not count against it.
    const double survival = 1.0 - cens_curve.left_limit(r.time);
    if (!(survival > 0.0)) {
      std::ostringstream msg;
      msg << "censoring survival is 0 just before the event at t=" << r.time;
      throw Error(ErrorCode::degenerate_weight, msg.str());
    }
    weights.push_back(1.0 / survival);
  }
  return weights;
}

double kde_density(const SurvivalSample& sample, const StepCdf& cens_curve, double t,
                   double h) {
  require_bandwidth(h);
  const auto weights = ipcw_weights(sample, cens_curve);
  const auto records = sample.records();
  double sum = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (weights[i] == 0.0) continue;
    sum += weights[i] * std_normal_pdf((records[i].time - t) / h);
  }
  return sum / (static_cast<double>(records.size()) * h);
}

// int fhat_h^2 = (1/n^2) sum_ij w_i w_j phi_{h sqrt 2}(T_i - T_j)
double integrated_square(std::span<const double> times, std::span<const double> weights,
                         double h) {
  require_bandwidth(h);
  const std::size_t n = times.size();
  const double s = h * std::numbers::sqrt2;
  double off_diagonal = 0.0;
  double diagonal = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] == 0.0) continue;
    diagonal += weights[i] * weights[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (weights[j] == 0.0) continue;
      off_diagonal += weights[i] * weights[j] * std_normal_pdf((times[i] - times[j]) / s);
    }
  }
  const double total = diagonal * std_normal_pdf(0.0) + 2.0 * off_diagonal;
  return total / (s * static_cast<double>(n) * static_cast<double>(n));
}

// J(h) = 1/(n(n-1)h) sum_{i != j} K((T_i - T_j)/h) w_i w_j
double cross_term(std::span<const double> times, std::span<const double> weights, double h) {
  require_bandwidth(h);
  const std::size_t n = times.size();
  if (n < 2) throw Error(ErrorCode::invalid_input, "cross-validation needs n >= 2");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] == 0.0) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (weights[j] == 0.0) continue;
      sum += weights[i] * weights[j] * std_normal_pdf((times[i] - times[j]) / h);
    }
  }
  const double nd = static_cast<double>(n);
  return 2.0 * sum / (nd * (nd - 1.0) * h);
}

double cv_score(const SurvivalSample& sample, const StepCdf& cens_curve, double h) {
  require_bandwidth(h);
  if (sample.size() < 2) throw Error(ErrorCode::invalid_input, "cross-validation needs n >= 2");
  const auto times = times_of(sample);
  const auto weights = ipcw_weights(sample, cens_curve);
  return integrated_square(times, weights, h) - 2.0 * cross_term(times, weights, h);
}

std::vector<double> default_bandwidth_grid(const SurvivalSample& sample) {
  std::vector<double> event_times;
  for (const auto& r : sample.records())
    if (r.event) event_times.push_back(r.time);
  double s = sample_sd(event_times);
  if (!(s > 0.0)) s = sample_sd(times_of(sample));
  if (!(s > 0.0)) s = 1.0;

  constexpr std::size_t count = 40;
  const double lo = std::log(0.05 * s);
  const double hi = std::log(2.0 * s);
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k)
    grid[k] = std::exp(lo + (hi - lo) * static_cast<double>(k) / (count - 1));
  return grid;
}

double cv_bandwidth(const SurvivalSample& sample, const StepCdf& cens_curve,
                    const KdeConfig& config) {
  const std::vector<double> grid =
      config.bandwidth_grid.empty() ? default_bandwidth_grid(sample) : config.bandwidth_grid;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    require_bandwidth(grid[k]);
    if (k > 0 && !(grid[k] > grid[k - 1]))
      throw Error(ErrorCode::invalid_input, "bandwidth grid must be strictly increasing");
  }
  if (sample.size() < 2) throw Error(ErrorCode::invalid_input, "cross-validation needs n >= 2");

  const auto times = times_of(sample);
  const auto weights = ipcw_weights(sample, cens_curve);
  double best_score = std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::quiet_NaN();
  for (double h : grid) {
    const double score = integrated_square(times, weights, h) - 2.0 * cross_term(times, weights, h);
    if (std::isfinite(score) && (std::isnan(best) || score < best_score)) {
      best_score = score;
      best = h;
    }
  }
  if (std::isnan(best))
    throw Error(ErrorCode::selection_failure, "no bandwidth produced a finite CV score");
  return best;
}

KdeEstimate kde_estimate(const SurvivalSample& sample, double t, const KdeConfig& config) {
  const StepCdf cens = km_fit_censoring(sample);
  const double h = cv_bandwidth(sample, cens, config);
  return {kde_density(sample, cens, t, h), h, t};
}

}  // namespace qdensity
