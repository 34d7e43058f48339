#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qdensity/survival.hpp"

namespace qdensity {

// Strictly increasing positive grid of candidate sigma values.
class SigmaGrid {
 public:
  explicit SigmaGrid(std::vector<double> values);

  // lo, lo+step, ... up to hi (inclusive, with a half-step tolerance).
  // Values are computed as lo + i*step so they do not accumulate error.
  static SigmaGrid arithmetic(double lo, double hi, double step);
  // 0.05, 0.10, ..., 10.00 (N = 200). sigma = 0 is left out: the
  // least-squares denominator vanishes there.
  static SigmaGrid default_grid();

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

 private:
  std::vector<double> values_;
};

// Per-sigma estimates aligned with a SigmaGrid, plus the neighborhood width h.
struct EstimateTrace {
  std::vector<double> estimates;
  std::size_t h = 20;
};

enum class SelectionStage { extremum, sliding_window };

// Plateau indices are 0-based and inclusive.
struct SigmaSelection {
  double sigma = 0.0;
  std::size_t plateau_lo = 0;
  std::size_t plateau_hi = 0;
  SelectionStage stage = SelectionStage::extremum;
};

// Grid-search plateau detection.
//
// Stage 1 scans i in [h, N-h-1] for points equal to the max or min of the
// window [i-h, i+h]; among those, the one with the smallest total variation
// over the window wins (first on ties) and the plateau is the window itself.
// Stage 2, only when Stage 1 finds nothing, slides a window of h consecutive
// absolute differences and keeps the first minimum; the plateau spans h+1
// grid points. The returned sigma is the centre of the plateau on the grid:
// the central grid value when the plateau has an odd number of points,
// otherwise the mean of the two central values.
//
// Throws Error(invalid_input) if h == 0, the trace and grid lengths differ,
// or the trace is shorter than 2h+1.
SigmaSelection select_sigma(const SigmaGrid& grid, const EstimateTrace& trace);

// One ls_density call per grid point; grid point i uses RNG stream i.
EstimateTrace grid_estimates(const StepCdf& curve, double p, const SigmaGrid& grid,
                             std::size_t resamples, std::uint64_t seed, std::size_t h = 20);

}  // namespace qdensity
