#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qdensity {

enum class ErrorCode {
  invalid_input,
  invalid_config,
  unreachable_quantile,
  degenerate_weight,
  selection_failure,
  calibration_failure,
  parse_error,
  io_error,
};

// Stable identifier printed on the diagnostic stream, e.g. "E_PARSE".
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qdensity
