#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qdensity/survival.hpp"

namespace qdensity {

struct KdeConfig {
  // Candidate bandwidths, strictly increasing and positive. Empty means
  // "derive the default grid from the sample" (see default_bandwidth_grid).
  std::vector<double> bandwidth_grid;
};

struct KdeEstimate {
  double value = 0.0;
  double bandwidth = 0.0;
  double eval_point = 0.0;
};

// IPCW weights delta_i / S_cens(T_i-) in the sample's record order. Censored
// records get weight 0. Throws Error(degenerate_weight) when an event sits
// where the censoring survival has dropped to 0.
std::vector<double> ipcw_weights(const SurvivalSample& sample, const StepCdf& cens_curve);

// (1/(n h)) sum_i w_i phi((T_i - t)/h) with a Gaussian kernel.
double kde_density(const SurvivalSample& sample, const StepCdf& cens_curve, double t,
                   double h);

// Cross-validation criterion int fhat_h^2 - 2 J(h). The first term uses the
// Gaussian convolution identity, J is the leave-one-out cross term.
double cv_score(const SurvivalSample& sample, const StepCdf& cens_curve, double h);

// The pieces of cv_score, exposed for checking.
double integrated_square(std::span<const double> times, std::span<const double> weights,
                         double h);
double cross_term(std::span<const double> times, std::span<const double> weights, double h);

// 40 log-spaced bandwidths over [0.05 s, 2 s], s the standard deviation of
// the event times (all times if fewer than two events; 1 if that is 0 too).
std::vector<double> default_bandwidth_grid(const SurvivalSample& sample);

// First minimiser of cv_score over the grid. Throws
// Error(selection_failure) if no score is finite.
double cv_bandwidth(const SurvivalSample& sample, const StepCdf& cens_curve,
                    const KdeConfig& config);

// CV bandwidth, then the estimate at t.
KdeEstimate kde_estimate(const SurvivalSample& sample, double t, const KdeConfig& config);

}  // namespace qdensity
