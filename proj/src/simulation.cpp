#include "qdensity/simulation.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>

#include "qdensity/error.hpp"
#include "qdensity/resampler.hpp"
#include "qdensity/rng.hpp"

namespace qdensity {

namespace {

// RNG stream ids inside one replicate.
constexpr std::uint64_t kSurvivalStream = 1;
constexpr std::uint64_t kCensoringStream = 2;
constexpr std::uint64_t kResamplingSalt = 0x5eed0f1e57ULL;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double survival_function(const SurvivalLaw& law, double t) {
  return std::visit(
      overloaded{
          [t](const Exponential& e) { return t <= 0.0 ? 1.0 : std::exp(-e.rate * t); },
          [t](const Cauchy& c) {
            return 0.5 - std::atan((t - c.location) / c.scale) / std::numbers::pi;
          },
      },
      law);
}

double draw_survival(const SurvivalLaw& law, double u) {
  return std::visit(
      overloaded{
          [u](const Exponential& e) { return -std::log(u) / e.rate; },
          [u](const Cauchy& c) {
            return c.location + c.scale * std::tan(std::numbers::pi * (u - 0.5));
          },
      },
      law);
}

std::uint64_t resampling_seed(std::uint64_t master_seed, std::size_t replicate) {
  return rng::derive_key(replicate_seed(master_seed, replicate), kResamplingSalt);
}

double resolve_censoring_rate(const ScenarioSpec& spec) {
  return spec.censoring_rate ? *spec.censoring_rate : calibrate_censoring(spec);
}

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

void ScenarioSpec::validate() const {
  const bool law_ok = std::visit(
      overloaded{
          [](const Exponential& e) { return e.rate > 0.0 && std::isfinite(e.rate); },
          [](const Cauchy& c) {
            return c.scale > 0.0 && std::isfinite(c.scale) && std::isfinite(c.location);
          },
      },
      survival);
  if (!law_ok) throw Error(ErrorCode::invalid_config, "survival law parameters out of range");
  if (!(target_censoring >= 0.0 && target_censoring <= 0.95))
    throw Error(ErrorCode::invalid_config, "target censoring must lie in [0, 0.95]");
  if (censoring_rate && !(*censoring_rate >= 0.0 && std::isfinite(*censoring_rate)))
    throw Error(ErrorCode::invalid_config, "censoring rate must be finite and >= 0");
  if (n < 2) throw Error(ErrorCode::invalid_config, "sample size n must be >= 2");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::invalid_config, "p must lie in (0, 1)");
  if (replications < 1) throw Error(ErrorCode::invalid_config, "replications must be >= 1");
  if (resamples < 2) throw Error(ErrorCode::invalid_config, "resamples B must be >= 2");
}

std::string_view law_name(const SurvivalLaw& law) {
  return std::holds_alternative<Exponential>(law) ? "exp" : "cauchy";
}

double true_quantile(const ScenarioSpec& spec) {
  const double p = spec.p;
  return std::visit(
      overloaded{
          [p](const Exponential& e) { return -std::log1p(-p) / e.rate; },
          [p](const Cauchy& c) {
            return c.location + c.scale * std::tan(std::numbers::pi * (p - 0.5));
          },
      },
      spec.survival);
}

double true_density_at_quantile(const ScenarioSpec& spec) {
  const double p = spec.p;
  return std::visit(
      overloaded{
          [p](const Exponential& e) { return e.rate * (1.0 - p); },
          [p](const Cauchy& c) {
            const double z = std::tan(std::numbers::pi * (p - 0.5));
            return 1.0 / (std::numbers::pi * c.scale * (1.0 + z * z));
          },
      },
      spec.survival);
}

double censoring_probability(const SurvivalLaw& law, double censoring_rate) {
  if (censoring_rate <= 0.0) return 0.0;
  if (const auto* e = std::get_if<Exponential>(&law))
    return censoring_rate / (e->rate + censoring_rate);
  // P(C < T) = int_0^inf rate e^{-rate c} S_T(c) dc = int_0^inf e^{-x} S_T(x/rate) dx
  boost::math::quadrature::exp_sinh<double> integrator;
  const auto integrand = [&](double x) {
    return std::exp(-x) * survival_function(law, x / censoring_rate);
  };
  return integrator.integrate(integrand, 0.0, std::numeric_limits<double>::infinity());
}

double calibrate_censoring(const ScenarioSpec& spec) {
  const double target = spec.target_censoring;
  if (!(target >= 0.0 && target <= 0.95))
    throw Error(ErrorCode::invalid_config, "target censoring must lie in [0, 0.95]");
  if (target == 0.0) return 0.0;
  if (const auto* e = std::get_if<Exponential>(&spec.survival))
    return target * e->rate / (1.0 - target);

  const auto gap = [&](double log_rate) {
    return censoring_probability(spec.survival, std::exp(log_rate)) - target;
  };
  double lo = std::log(1e-8);
  double hi = std::log(1e8);
  if (gap(lo) > 0.0 || gap(hi) < 0.0) {
    std::ostringstream msg;
    msg << "no exponential censoring rate reaches " << target << " censoring for the "
        << law_name(spec.survival) << " law";
    throw Error(ErrorCode::calibration_failure, msg.str());
  }
  const auto bracket = boost::math::tools::bisect(
      gap, lo, hi, [](double a, double b) { return std::abs(b - a) <= 1e-9; });
  return std::exp(0.5 * (bracket.first + bracket.second));
}

std::uint64_t replicate_seed(std::uint64_t master_seed, std::size_t replicate) {
  return rng::derive_key(master_seed, static_cast<std::uint64_t>(replicate));
}

SurvivalSample draw_sample(const ScenarioSpec& spec, double censoring_rate,
                           std::size_t replicate) {
  const std::uint64_t seed = replicate_seed(spec.master_seed, replicate);
  const rng::CounterStream survival(seed, kSurvivalStream);
  const rng::CounterStream censoring(seed, kCensoringStream);

  std::vector<SurvivalRecord> records(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double t = draw_survival(spec.survival, survival.uniform(i));
    const double c = censoring_rate > 0.0 ? -std::log(censoring.uniform(i)) / censoring_rate
                                          : std::numeric_limits<double>::infinity();
    records[i] = {std::min(t, c), t <= c};
  }
  const TimeDomain domain =
      std::holds_alternative<Cauchy>(spec.survival) ? TimeDomain::finite : TimeDomain::positive;
  return SurvivalSample::from_records(std::move(records), domain);
}

std::string_view method_name(Method method) { return method == Method::ls ? "LS" : "KDE"; }

ErrorSummary summarize_errors(std::span<const double> estimates, double truth) {
  if (estimates.empty()) throw Error(ErrorCode::invalid_input, "no estimates to summarize");
  const double r = static_cast<double>(estimates.size());
  double mean = 0.0;
  for (double v : estimates) mean += v;
  mean /= r;
  double variance = 0.0;
  double mse = 0.0;
  for (double v : estimates) {
    variance += (v - mean) * (v - mean);
    mse += (v - truth) * (v - truth);
  }
  return {mean - truth, variance / r, mse / r};
}

ComparisonResult run_comparison(const ScenarioSpec& spec, const SigmaSelector& selector,
                                const KdeConfig& kde) {
  spec.validate();
  if (selector.fixed_sigma) LsConfig{spec.resamples, *selector.fixed_sigma, 0, 0}.validate();
  const double censoring_rate = resolve_censoring_rate(spec);
  const double truth = true_density_at_quantile(spec);
  const std::size_t reps = spec.replications;

  struct Replicate {
    bool used = false;
    double ls = 0.0;
    double kde = 0.0;
    double sigma = 0.0;
    std::size_t censored = 0;
  };
  std::vector<Replicate> out(reps);
  std::vector<std::exception_ptr> errors(reps);

  const auto count = static_cast<std::ptrdiff_t>(reps);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ri = 0; ri < count; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    try {
      const SurvivalSample sample = draw_sample(spec, censoring_rate, r);
      const StepCdf curve = km_fit(sample);
      QuantileEstimate q;
      try {
        q = quantile(curve, spec.p);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::unreachable_quantile) continue;
        throw;
      }
      Replicate& rep = out[r];
      const std::uint64_t seed = resampling_seed(spec.master_seed, r);

      if (selector.fixed_sigma) {
        rep.sigma = *selector.fixed_sigma;
      } else {
        const EstimateTrace trace =
            grid_estimates(curve, spec.p, selector.grid, spec.resamples, seed, selector.h);
        rep.sigma = select_sigma(selector.grid, trace).sigma;
      }
      // Fresh stream for the final estimate, past the grid's streams.
      const LsConfig config{spec.resamples, rep.sigma, seed, selector.grid.size()};
      rep.ls = ls_density_with(curve, q.q_hat, spec.p, sample.size(), config).value;
      rep.kde = kde_estimate(sample, q.q_hat, kde).value;
      rep.censored = sample.size() - sample.event_count();
      rep.used = true;
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  rethrow_first(errors);

  ComparisonResult result;
  result.censoring_rate = censoring_rate;
  std::size_t censored = 0;
  for (const auto& rep : out) {
    if (!rep.used) {
      ++result.excluded_replicates;
      continue;
    }
    ++result.used_replicates;
    censored += rep.censored;
    result.ls_estimates.push_back(rep.ls);
    result.kde_estimates.push_back(rep.kde);
    result.selected_sigmas.push_back(rep.sigma);
  }
  if (result.used_replicates == 0)
    throw Error(ErrorCode::unreachable_quantile, "every replicate had an unreachable quantile");
  result.realized_censoring =
      static_cast<double>(censored) / static_cast<double>(result.used_replicates * spec.n);

  for (Method method : {Method::ls, Method::kde}) {
    const auto& values = method == Method::ls ? result.ls_estimates : result.kde_estimates;
    const ErrorSummary s = summarize_errors(values, truth);
    result.rows.push_back({method, spec.target_censoring, spec.n, s.bias, s.variance, s.mse});
  }
  return result;
}

MseCurve mse_curve(const ScenarioSpec& spec, const SigmaGrid& grid) {
  spec.validate();
  const double censoring_rate = resolve_censoring_rate(spec);
  const double truth = true_density_at_quantile(spec);
  const std::size_t reps = spec.replications;
  const std::size_t points = grid.size();

  // Row r holds replicate r's squared errors; an empty row marks an excluded replicate.
  std::vector<std::vector<double>> squared(reps);
  std::vector<std::exception_ptr> errors(reps);

  const auto count = static_cast<std::ptrdiff_t>(reps);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ri = 0; ri < count; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    try {
      const StepCdf curve = km_fit(draw_sample(spec, censoring_rate, r));
      if (curve.max_value() < spec.p) continue;
      const EstimateTrace trace = grid_estimates(curve, spec.p, grid, spec.resamples,
                                                 resampling_seed(spec.master_seed, r), 1);
      auto& row = squared[r];
      row.resize(points);
      for (std::size_t i = 0; i < points; ++i)
        row[i] = (trace.estimates[i] - truth) * (trace.estimates[i] - truth);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  rethrow_first(errors);

  MseCurve curve;
  std::vector<double> sums(points, 0.0);
  std::size_t used = 0;
  for (const auto& row : squared) {
    if (row.empty()) {
      ++curve.excluded_replicates;
      continue;
    }
    ++used;
    for (std::size_t i = 0; i < points; ++i) sums[i] += row[i];
  }
  if (used == 0)
    throw Error(ErrorCode::unreachable_quantile, "every replicate had an unreachable quantile");
  for (std::size_t i = 0; i < points; ++i)
    curve.points.push_back({grid[i], sums[i] / static_cast<double>(used)});
  return curve;
}

std::size_t plateau_width(std::span<const MseCurvePoint> curve, double factor) {
  if (curve.empty()) return 0;
  double best = curve.front().mse;
  for (const auto& pt : curve) best = std::min(best, pt.mse);
  std::size_t width = 0;
  for (const auto& pt : curve)
    if (pt.mse <= factor * best) ++width;
  return width;
}

}  // namespace qdensity
