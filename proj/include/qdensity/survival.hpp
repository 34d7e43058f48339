#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qdensity {

struct SurvivalRecord {
  double time = 0.0;
  bool event = false;

  friend bool operator==(const SurvivalRecord&, const SurvivalRecord&) = default;
};

// Which observation times a sample accepts. Cauchy-type scenarios produce
// negative times, so positivity can be relaxed to finiteness.
enum class TimeDomain { positive, finite };

// Right-censored sample (T_i, Delta_i), sorted ascending by time with events
// before censorings at equal times. Immutable once built.
class SurvivalSample {
 public:
  // Throws Error(invalid_input) on empty input or a time outside `domain`.
  static SurvivalSample from_records(std::vector<SurvivalRecord> records,
                                     TimeDomain domain = TimeDomain::positive);
  static SurvivalSample from_columns(std::span<const double> times,
                                     std::span<const bool> events,
                                     TimeDomain domain = TimeDomain::positive);

  std::span<const SurvivalRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t event_count() const noexcept;
  TimeDomain domain() const noexcept { return domain_; }

  // Same times with Delta_i replaced by 1 - Delta_i (re-sorted).
  SurvivalSample with_flipped_events() const;

 private:
  SurvivalSample(std::vector<SurvivalRecord> records, TimeDomain domain)
      : records_(std::move(records)), domain_(domain) {}

  std::vector<SurvivalRecord> records_;
  TimeDomain domain_ = TimeDomain::positive;
};

// Right-continuous step CDF. Value is 0 before the first jump and constant
// after the last one. `sample_size` is the n of the sample it was fitted on.
class StepCdf {
 public:
  StepCdf(std::vector<double> jump_times, std::vector<double> post_jump_values,
          std::size_t sample_size);

  std::span<const double> jump_times() const noexcept { return jump_times_; }
  std::span<const double> post_jump_values() const noexcept { return values_; }
  std::size_t sample_size() const noexcept { return sample_size_; }

  // Largest value the curve attains (0 for a curve without jumps).
  double max_value() const noexcept { return values_.empty() ? 0.0 : values_.back(); }
  bool reaches_one() const noexcept { return reaches_one_; }

  // F(t): value of the last jump <= t.
  double operator()(double t) const noexcept;
  // F(t-): value of the last jump < t.
  double left_limit(double t) const noexcept;

 private:
  std::vector<double> jump_times_;
  std::vector<double> values_;
  std::size_t sample_size_ = 0;
  bool reaches_one_ = false;
};

struct QuantileEstimate {
  double p = 0.0;
  double q_hat = 0.0;
};

// Product-limit estimate of the event-time CDF.
StepCdf km_fit(const SurvivalSample& sample);

// Product-limit estimate of the censoring-time CDF (indicators flipped);
// the censoring survival is 1 - value.
StepCdf km_fit_censoring(const SurvivalSample& sample);

inline double cdf_eval(const StepCdf& curve, double t) noexcept { return curve(t); }

// q_hat = inf{t : F(t) >= p}. Throws Error(unreachable_quantile) when the
// curve plateaus below p, Error(invalid_input) unless 0 < p < 1.
QuantileEstimate quantile(const StepCdf& curve, double p);

}  // namespace qdensity
