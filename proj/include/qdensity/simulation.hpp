#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "qdensity/kde.hpp"
#include "qdensity/survival.hpp"
#include "qdensity/variance_select.hpp"

namespace qdensity {

struct Exponential {
  double rate = 1.0;
};

struct Cauchy {
  double location = 0.0;
  double scale = 1.0;
};

using SurvivalLaw = std::variant<Exponential, Cauchy>;

// Generative model for one Monte-Carlo study. Censoring is exponential with
// a rate chosen to hit `target_censoring`, unless `censoring_rate` is given.
struct ScenarioSpec {
  SurvivalLaw survival = Exponential{1.5};
  double target_censoring = 0.1;
  std::optional<double> censoring_rate;
  std::size_t n = 200;
  double p = 0.5;
  std::size_t replications = 500;
  std::size_t resamples = 1000;
  std::uint64_t master_seed = 1;

  // Throws Error(invalid_config) on out-of-range fields.
  void validate() const;
};

std::string_view law_name(const SurvivalLaw& law);

double true_quantile(const ScenarioSpec& spec);
double true_density_at_quantile(const ScenarioSpec& spec);

// Exponential censoring rate giving P(C < T) = target. Closed form for
// exponential survival; bisection on a quadrature for Cauchy. Returns 0 for
// target 0 (no censoring). Throws Error(calibration_failure) if no rate in
// the search bracket reaches the target.
double calibrate_censoring(const ScenarioSpec& spec);

// P(C < T) for exponential censoring with the given rate.
double censoring_probability(const SurvivalLaw& law, double censoring_rate);

// Replicate r of the scenario. Draws depend only on (master_seed, r, i).
SurvivalSample draw_sample(const ScenarioSpec& spec, double censoring_rate,
                           std::size_t replicate);

std::uint64_t replicate_seed(std::uint64_t master_seed, std::size_t replicate);

enum class Method { ls, kde };
std::string_view method_name(Method method);

struct ComparisonRow {
  Method method = Method::ls;
  double censoring = 0.0;
  std::size_t n = 0;
  double bias = 0.0;
  double variance = 0.0;
  double mse = 0.0;
};

// How the resampling sigma is chosen per replicate.
struct SigmaSelector {
  std::optional<double> fixed_sigma;
  SigmaGrid grid = SigmaGrid::default_grid();
  std::size_t h = 20;
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;  // LS then KDE
  double censoring_rate = 0.0;
  double realized_censoring = 0.0;  // over the replicates used
  std::size_t used_replicates = 0;
  std::size_t excluded_replicates = 0;  // unreachable quantile
  std::vector<double> ls_estimates;
  std::vector<double> kde_estimates;
  std::vector<double> selected_sigmas;
};

ComparisonResult run_comparison(const ScenarioSpec& spec, const SigmaSelector& selector,
                                const KdeConfig& kde);

struct ErrorSummary {
  double bias = 0.0;
  double variance = 0.0;  // population convention (divide by R)
  double mse = 0.0;
};

// Throws Error(invalid_input) on an empty span.
ErrorSummary summarize_errors(std::span<const double> estimates, double truth);

struct MseCurvePoint {
  double sigma = 0.0;
  double mse = 0.0;
};

struct MseCurve {
  std::vector<MseCurvePoint> points;
  std::size_t excluded_replicates = 0;
};

// MSE of the resampling estimate at each grid sigma over the replicates.
MseCurve mse_curve(const ScenarioSpec& spec, const SigmaGrid& grid);

// Sigmas whose MSE is at most `factor` times the curve minimum.
std::size_t plateau_width(std::span<const MseCurvePoint> curve, double factor);

}  // namespace qdensity
