#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qdensity/simulation.hpp"
#include "qdensity/survival.hpp"

namespace qdensity::io {

// Reads a `time,event` CSV with a header row. Events must be 0 or 1. Times
// must be finite, and positive unless `domain` is TimeDomain::finite.
// Throws Error(parse_error) with line/column on malformed rows and
// Error(invalid_input) when there are no data rows.
SurvivalSample parse_csv(std::istream& in, TimeDomain domain = TimeDomain::positive);
SurvivalSample ingest_csv(const std::filesystem::path& path,
                          TimeDomain domain = TimeDomain::positive);

// Two-column plot data: a header line "x y" then "%.6g %.6g" rows, LF only.
struct XyTable {
  std::vector<std::pair<double, double>> rows;
};

std::string format_xy(const XyTable& table);
void emit_xy(const XyTable& table, const std::filesystem::path& path);
XyTable read_xy(const std::filesystem::path& path);
XyTable parse_xy(std::istream& in);

// Parses "lo:hi:step".
SigmaGrid parse_sigma_grid(std::string_view text);

// Results table with columns scenario,n,censoring,method,bias,variance,mse.
// Numbers use four decimals.
struct ResultLine {
  std::string scenario;
  ComparisonRow row;
};
std::string format_results_csv(std::span<const ResultLine> lines);

// Full command-line entry point. Returns the process exit status; errors
// go to `err` as "error[E_CODE]: message".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qdensity::io
