#include "qdensity/variance_select.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qdensity/error.hpp"
#include "qdensity/resampler.hpp"

namespace qdensity {

SigmaGrid::SigmaGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorCode::invalid_input, "sigma grid is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] > 0.0) || !std::isfinite(values_[i]))
      throw Error(ErrorCode::invalid_input, "sigma grid values must be positive and finite");
    if (i > 0 && !(values_[i] > values_[i - 1]))
      throw Error(ErrorCode::invalid_input, "sigma grid must be strictly increasing");
  }
}

SigmaGrid SigmaGrid::arithmetic(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi))
    throw Error(ErrorCode::invalid_input, "sigma grid needs lo <= hi and step > 0");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5)) + 1;
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = lo + static_cast<double>(i) * step;
  return SigmaGrid(std::move(values));
}

SigmaGrid SigmaGrid::default_grid() { return arithmetic(0.05, 10.0, 0.05); }

namespace {

// Centre of the plateau [lo, hi] on the grid.
double plateau_centre(const SigmaGrid& grid, std::size_t lo, std::size_t hi) {
  if ((hi - lo) % 2 == 0) return grid[(lo + hi) / 2];
  return 0.5 * (grid[(lo + hi) / 2] + grid[(lo + hi) / 2 + 1]);
}

}  // namespace

SigmaSelection select_sigma(const SigmaGrid& grid, const EstimateTrace& trace) {
  const auto& f = trace.estimates;
  const std::size_t n = f.size();
  const std::size_t h = trace.h;
  if (h == 0) throw Error(ErrorCode::invalid_input, "neighborhood width h must be >= 1");
  if (n != grid.size())
    throw Error(ErrorCode::invalid_input, "trace and sigma grid differ in length");
  if (n < 2 * h + 1) {
    std::ostringstream msg;
    msg << "trace of length " << n << " is shorter than 2h+1 = " << 2 * h + 1;
    throw Error(ErrorCode::invalid_input, msg.str());
  }

  // Stage 1: local extrema of the (2h+1)-window, least total variation.
  double best_variation = std::numeric_limits<double>::infinity();
  std::size_t best = n;
  for (std::size_t i = h; i + h < n; ++i) {
    double lo = f[i - h];
    double hi = f[i - h];
    for (std::size_t k = i - h; k <= i + h; ++k) {
      lo = std::min(lo, f[k]);
      hi = std::max(hi, f[k]);
    }
    if (f[i] != hi && f[i] != lo) continue;

    double variation = 0.0;
    for (std::size_t k = i - h; k < i + h; ++k) variation += std::abs(f[k + 1] - f[k]);
    if (variation < best_variation) {
      best_variation = variation;
      best = i;
    }
  }
  if (best < n) {
    return {plateau_centre(grid, best - h, best + h), best - h, best + h,
            SelectionStage::extremum};
  }

  // Stage 2: sliding window over h consecutive absolute differences.
  best_variation = std::numeric_limits<double>::infinity();
  std::size_t start = 0;
  for (std::size_t j = 0; j + h < n; ++j) {
    double variation = 0.0;
    for (std::size_t k = j; k < j + h; ++k) variation += std::abs(f[k + 1] - f[k]);
    if (variation < best_variation) {
      best_variation = variation;
      start = j;
    }
  }
  return {plateau_centre(grid, start, start + h), start, start + h,
          SelectionStage::sliding_window};
}

EstimateTrace grid_estimates(const StepCdf& curve, double p, const SigmaGrid& grid,
                             std::size_t resamples, std::uint64_t seed, std::size_t h) {
  const QuantileEstimate q = quantile(curve, p);
  LsConfig base{resamples, grid[0], seed, 0};
  base.validate();

  EstimateTrace trace{std::vector<double>(grid.size()), h};
  const auto count = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    LsConfig config = base;
    config.sigma = grid[static_cast<std::size_t>(i)];
    config.stream = static_cast<std::uint64_t>(i);
    trace.estimates[static_cast<std::size_t>(i)] =
        ls_density_with(curve, q.q_hat, p, curve.sample_size(), config).value;
  }
  return trace;
}

}  // namespace qdensity
