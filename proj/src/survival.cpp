#include "qdensity/survival.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qdensity/error.hpp"

namespace qdensity {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_input: return "E_INVALID_INPUT";
    case ErrorCode::invalid_config: return "E_INVALID_CONFIG";
    case ErrorCode::unreachable_quantile: return "E_UNREACHABLE_QUANTILE";
    case ErrorCode::degenerate_weight: return "E_DEGENERATE_WEIGHT";
    case ErrorCode::selection_failure: return "E_SELECTION_FAILURE";
    case ErrorCode::calibration_failure: return "E_CALIBRATION_FAILURE";
    case ErrorCode::parse_error: return "E_PARSE";
    case ErrorCode::io_error: return "E_IO";
  }
  return "E_UNKNOWN";
}

namespace {

bool record_order(const SurvivalRecord& a, const SurvivalRecord& b) {
  if (a.time != b.time) return a.time < b.time;
  return a.event && !b.event;  // events first at tied times
}

}  // namespace

SurvivalSample SurvivalSample::from_records(std::vector<SurvivalRecord> records,
                                            TimeDomain domain) {
  if (records.empty()) throw Error(ErrorCode::invalid_input, "survival sample is empty");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double t = records[i].time;
    const bool ok = std::isfinite(t) && (domain == TimeDomain::finite || t > 0.0);
    if (!ok) {
      std::ostringstream msg;
      msg << "record " << i << ": time " << t
          << (domain == TimeDomain::positive ? " is not finite and positive"
                                             : " is not finite");
      throw Error(ErrorCode::invalid_input, msg.str());
    }
  }
  std::sort(records.begin(), records.end(), record_order);
  return SurvivalSample(std::move(records), domain);
}

SurvivalSample SurvivalSample::from_columns(std::span<const double> times,
                                            std::span<const bool> events, TimeDomain domain) {
  if (times.size() != events.size())
    throw Error(ErrorCode::invalid_input, "time and event columns differ in length");
  std::vector<SurvivalRecord> records(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) records[i] = {times[i], events[i]};
  return from_records(std::move(records), domain);
}

std::size_t SurvivalSample::event_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [](const auto& r) { return r.event; }));
}

SurvivalSample SurvivalSample::with_flipped_events() const {
  std::vector<SurvivalRecord> flipped(records_.begin(), records_.end());
  for (auto& r : flipped) r.event = !r.event;
  return from_records(std::move(flipped), domain_);
}

StepCdf::StepCdf(std::vector<double> jump_times, std::vector<double> post_jump_values,
                 std::size_t sample_size)
    : jump_times_(std::move(jump_times)),
      values_(std::move(post_jump_values)),
      sample_size_(sample_size) {
  if (jump_times_.size() != values_.size())
    throw Error(ErrorCode::invalid_input, "jump times and values differ in length");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!(values_[i] >= 0.0 && values_[i] <= 1.0))
      throw Error(ErrorCode::invalid_input, "step CDF value outside [0, 1]");
    if (i > 0 && !(jump_times_[i] > jump_times_[i - 1] && values_[i] >= values_[i - 1]))
      throw Error(ErrorCode::invalid_input, "step CDF must have increasing jumps");
  }
  reaches_one_ = !values_.empty() && values_.back() >= 1.0;
}

double StepCdf::operator()(double t) const noexcept {
  const auto it = std::upper_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return 0.0;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

double StepCdf::left_limit(double t) const noexcept {
  const auto it = std::lower_bound(jump_times_.begin(), jump_times_.end(), t);
  if (it == jump_times_.begin()) return 0.0;
  return values_[static_cast<std::size_t>(it - jump_times_.begin()) - 1];
}

// Product-limit estimator. Between two censoring times the product
// telescopes, so the CDF after an event is computed as
//   F_anchor + S_anchor * (r_anchor - m) / r_anchor,
// where the anchor is the state just after the last censoring, r_anchor the
// risk set there and m the number still at risk. Without censoring this is
// exactly k/n, the empirical CDF.
StepCdf km_fit(const SurvivalSample& sample) {
  const auto records = sample.records();
  const std::size_t n = records.size();
  if (n == 0) throw Error(ErrorCode::invalid_input, "survival sample is empty");

  std::vector<double> jumps;
  std::vector<double> values;

  double anchor_cdf = 0.0;
  double anchor_surv = 1.0;
  std::size_t anchor_risk = n;
  std::size_t at_risk = n;

  std::size_t i = 0;
  while (i < n) {
    const double t = records[i].time;
    std::size_t events = 0;
    std::size_t censored = 0;
    for (; i < n && records[i].time == t; ++i) (records[i].event ? events : censored) += 1;

    if (events > 0) {
      at_risk -= events;
      const double value =
          at_risk == 0
              ? 1.0
              : anchor_cdf + anchor_surv * (static_cast<double>(anchor_risk - at_risk) /
                                            static_cast<double>(anchor_risk));
      jumps.push_back(t);
      values.push_back(value);
    }
    if (censored > 0) {
      if (at_risk != anchor_risk) {
        anchor_cdf = values.back();
        anchor_surv *= static_cast<double>(at_risk) / static_cast<double>(anchor_risk);
      }
      at_risk -= censored;
      anchor_risk = at_risk;
    }
  }
  return StepCdf(std::move(jumps), std::move(values), n);
}

StepCdf km_fit_censoring(const SurvivalSample& sample) {
  return km_fit(sample.with_flipped_events());
}

QuantileEstimate quantile(const StepCdf& curve, double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::invalid_input, "p must lie in (0, 1)");
  const auto values = curve.post_jump_values();
  const auto it = std::lower_bound(values.begin(), values.end(), p);
  if (it == values.end()) {
    std::ostringstream msg;
    msg << "quantile p=" << p << " is not reached; the CDF estimate plateaus at "
        << curve.max_value();
    throw Error(ErrorCode::unreachable_quantile, msg.str());
  }
  return {p, curve.jump_times()[static_cast<std::size_t>(it - values.begin())]};
}

}  // namespace qdensity
