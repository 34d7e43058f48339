#include "qdensity/cli_io.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "qdensity/error.hpp"
#include "qdensity/kde.hpp"
#include "qdensity/resampler.hpp"
#include "qdensity/variance_select.hpp"

namespace qdensity::io {

namespace {

std::string format_number(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, value);
  return buf;
}

std::string g6(double v) { return format_number("%.6g", v); }
std::string f4(double v) {
  std::string s = format_number("%.4f", v);
  return s == "-0.0000" ? "0.0000" : s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

[[noreturn]] void parse_fail(std::size_t line, std::size_t column, const std::string& what) {
  std::ostringstream msg;
  msg << "line " << line << ", column " << column << ": " << what;
  throw Error(ErrorCode::parse_error, msg.str());
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  const std::string owned(text);
  char* end = nullptr;
  const double value = std::strtod(owned.c_str(), &end);
  if (end != owned.c_str() + owned.size()) return std::nullopt;
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  return in;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::io_error, "failed writing " + path.string());
}

}  // namespace

SurvivalSample parse_csv(std::istream& in, TimeDomain domain) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::invalid_input, "input file is empty");
  ++line_no;
  {
    const std::string_view header = trim(line);
    const auto comma = header.find(',');
    if (comma == std::string_view::npos || trim(header.substr(0, comma)) != "time" ||
        trim(header.substr(comma + 1)) != "event")
      parse_fail(line_no, 1, "expected header 'time,event'");
  }

  std::vector<SurvivalRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    if (comma == std::string_view::npos) parse_fail(line_no, 1, "expected two columns");
    if (row.find(',', comma + 1) != std::string_view::npos)
      parse_fail(line_no, comma + 2, "unexpected third column");

    const auto time = parse_double(row.substr(0, comma));
    if (!time) parse_fail(line_no, 1, "time is not a number");
    if (!std::isfinite(*time)) parse_fail(line_no, 1, "time is not finite");
    if (domain == TimeDomain::positive && !(*time > 0.0))
      parse_fail(line_no, 1, "time must be positive (use --allow-negative to relax)");

    const std::string_view event = trim(row.substr(comma + 1));
    if (event != "0" && event != "1") parse_fail(line_no, comma + 2, "event must be 0 or 1");
    records.push_back({*time, event == "1"});
  }
  if (records.empty()) throw Error(ErrorCode::invalid_input, "input has no data rows");
  return SurvivalSample::from_records(std::move(records), domain);
}

SurvivalSample ingest_csv(const std::filesystem::path& path, TimeDomain domain) {
  auto in = open_input(path);
  return parse_csv(in, domain);
}

std::string format_xy(const XyTable& table) {
  if (table.rows.empty()) throw Error(ErrorCode::invalid_input, "XY table has no rows");
  std::string text = "x y\n";
  for (const auto& [x, y] : table.rows) {
    if (!std::isfinite(x) || !std::isfinite(y))
      throw Error(ErrorCode::invalid_input, "XY table values must be finite");
    text += g6(x) + ' ' + g6(y) + '\n';
  }
  return text;
}

void emit_xy(const XyTable& table, const std::filesystem::path& path) {
  write_file(path, format_xy(table));
}

XyTable parse_xy(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || trim(line) != "x y")
    parse_fail(line_no, 1, "expected header 'x y'");
  XyTable table;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto space = row.find(' ');
    if (space == std::string_view::npos) parse_fail(line_no, 1, "expected two columns");
    const auto x = parse_double(row.substr(0, space));
    const auto y = parse_double(row.substr(space + 1));
    if (!x) parse_fail(line_no, 1, "x is not a number");
    if (!y) parse_fail(line_no, space + 2, "y is not a number");
    table.rows.emplace_back(*x, *y);
  }
  if (table.rows.empty()) throw Error(ErrorCode::invalid_input, "XY file has no rows");
  return table;
}

XyTable read_xy(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_xy(in);
}

SigmaGrid parse_sigma_grid(std::string_view text) {
  const auto first = text.find(':');
  const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
  if (second == std::string_view::npos)
    throw Error(ErrorCode::invalid_input, "sigma grid must be lo:hi:step");
  const auto lo = parse_double(text.substr(0, first));
  const auto hi = parse_double(text.substr(first + 1, second - first - 1));
  const auto step = parse_double(text.substr(second + 1));
  if (!lo || !hi || !step) throw Error(ErrorCode::invalid_input, "sigma grid must be lo:hi:step");
  return SigmaGrid::arithmetic(*lo, *hi, *step);
}

std::string format_results_csv(std::span<const ResultLine> lines) {
  std::string text = "scenario,n,censoring,method,bias,variance,mse\n";
  for (const auto& line : lines) {
    const auto& r = line.row;
    text += line.scenario + ',' + std::to_string(r.n) + ',' + format_number("%.2f", r.censoring) +
            ',' + std::string(method_name(r.method)) + ',' + f4(r.bias) + ',' + f4(r.variance) +
            ',' + f4(r.mse) + '\n';
  }
  return text;
}

namespace {

// log-spaced "lo:hi:count"
std::vector<double> parse_bandwidth_grid(std::string_view text) {
  const auto first = text.find(':');
  const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
  if (second == std::string_view::npos)
    throw Error(ErrorCode::invalid_input, "bandwidth grid must be lo:hi:count");
  const auto lo = parse_double(text.substr(0, first));
  const auto hi = parse_double(text.substr(first + 1, second - first - 1));
  const auto count = parse_double(text.substr(second + 1));
  if (!lo || !hi || !count || !(*lo > 0.0) || !(*hi >= *lo) || !(*count >= 1.0) ||
      *count != std::floor(*count))
    throw Error(ErrorCode::invalid_input, "bandwidth grid must be lo:hi:count with 0 < lo <= hi");
  const auto k = static_cast<std::size_t>(*count);
  if (k == 1) return {*lo};
  std::vector<double> grid(k);
  for (std::size_t i = 0; i < k; ++i)
    grid[i] = std::exp(std::log(*lo) + (std::log(*hi) - std::log(*lo)) * static_cast<double>(i) /
                                           static_cast<double>(k - 1));
  return grid;
}

struct SampleOptions {
  std::string input;
  double p = 0.5;
  bool allow_negative = false;

  TimeDomain domain() const { return allow_negative ? TimeDomain::finite : TimeDomain::positive; }
};

struct ResampleOptions {
  std::size_t resamples = 100000;
  std::optional<double> sigma;
  std::string sigma_grid = "0.05:10:0.05";
  std::size_t h = 20;
  std::uint64_t seed = 1;
  std::string out_dir;
};

struct ScenarioOptions {
  std::string scenario = "exp";
  double rate = 1.5;
  double location = 0.0;
  double scale = 1.0;
  std::vector<std::size_t> n;
  std::size_t reps = 0;
  std::size_t resamples = 0;
  double p = 0.5;
  std::uint64_t seed = 1;
  std::string out_dir = ".";

  SurvivalLaw law() const {
    if (scenario == "exp") return Exponential{rate};
    return Cauchy{location, scale};
  }
};

void add_sample_options(CLI::App& cmd, SampleOptions& opt) {
  cmd.add_option("--input", opt.input, "CSV file with header time,event")->required();
  cmd.add_option("--p", opt.p, "quantile level in (0,1)")->capture_default_str();
  cmd.add_flag("--allow-negative", opt.allow_negative, "accept non-positive times");
}

void add_resample_options(CLI::App& cmd, ResampleOptions& opt) {
  cmd.add_option("--B", opt.resamples, "number of Gaussian resamples")->capture_default_str();
  cmd.add_option("--sigma-grid", opt.sigma_grid, "candidate sigmas lo:hi:step")
      ->capture_default_str();
  cmd.add_option("--h", opt.h, "neighborhood width of the plateau search")->capture_default_str();
  cmd.add_option("--seed", opt.seed, "RNG seed")->capture_default_str();
  cmd.add_option("--out-dir", opt.out_dir, "directory for plot-data files");
}

void add_scenario_options(CLI::App& cmd, ScenarioOptions& opt) {
  cmd.add_option("--scenario", opt.scenario, "survival law")
      ->check(CLI::IsMember({"exp", "cauchy"}))
      ->capture_default_str();
  cmd.add_option("--rate", opt.rate, "exponential survival rate")->capture_default_str();
  cmd.add_option("--location", opt.location, "Cauchy location")->capture_default_str();
  cmd.add_option("--scale", opt.scale, "Cauchy scale")->capture_default_str();
  cmd.add_option("--n", opt.n, "sample sizes")->delimiter(',')->capture_default_str();
  cmd.add_option("--reps", opt.reps, "Monte-Carlo replications")->capture_default_str();
  cmd.add_option("--B", opt.resamples, "number of Gaussian resamples")->capture_default_str();
  cmd.add_option("--p", opt.p, "quantile level in (0,1)")->capture_default_str();
  cmd.add_option("--seed", opt.seed, "master seed")->capture_default_str();
  cmd.add_option("--out-dir", opt.out_dir, "output directory")->capture_default_str();
}

void write_or_print(const XyTable& table, const std::string& out_dir, const char* name,
                    std::ostream& out) {
  if (out_dir.empty()) {
    out << format_xy(table);
  } else {
    const auto path = std::filesystem::path(out_dir) / name;
    emit_xy(table, path);
    out << "wrote " << path.string() << '\n';
  }
}

XyTable trace_table(const SigmaGrid& grid, const EstimateTrace& trace) {
  XyTable table;
  for (std::size_t i = 0; i < grid.size(); ++i) table.rows.emplace_back(grid[i], trace.estimates[i]);
  return table;
}

std::string_view stage_name(SelectionStage stage) {
  return stage == SelectionStage::extremum ? "extremum" : "sliding-window";
}

void report_selection(std::ostream& out, const SigmaGrid& grid, const SigmaSelection& sel) {
  out << "sigma " << g6(sel.sigma) << '\n'
      << "stage " << stage_name(sel.stage) << '\n'
      << "plateau " << g6(grid[sel.plateau_lo]) << ' ' << g6(grid[sel.plateau_hi]) << '\n'
      << "plateau_index " << sel.plateau_lo + 1 << ' ' << sel.plateau_hi + 1 << '\n';
}

void cmd_estimate(const SampleOptions& s, const ResampleOptions& r, std::ostream& out) {
  const SurvivalSample sample = ingest_csv(s.input, s.domain());
  const StepCdf curve = km_fit(sample);
  const QuantileEstimate q = quantile(curve, s.p);
  out << "n " << sample.size() << '\n' << "p " << g6(s.p) << '\n' << "q_hat " << g6(q.q_hat) << '\n';

  LsConfig config{r.resamples, 1.0, r.seed, 0};
  if (r.sigma) {
    config.sigma = *r.sigma;
    out << "sigma " << g6(config.sigma) << '\n' << "stage fixed\n";
  } else {
    const SigmaGrid grid = parse_sigma_grid(r.sigma_grid);
    const EstimateTrace trace = grid_estimates(curve, s.p, grid, r.resamples, r.seed, r.h);
    const SigmaSelection sel = select_sigma(grid, trace);
    report_selection(out, grid, sel);
    config.sigma = sel.sigma;
    config.stream = grid.size();
    if (!r.out_dir.empty()) write_or_print(trace_table(grid, trace), r.out_dir, "trace.txt", out);
  }
  const LsEstimate est = ls_density_with(curve, q.q_hat, s.p, sample.size(), config);
  out << "B " << r.resamples << '\n'
      << "estimate " << g6(est.value) << '\n'
      << "mc_std_error " << g6(est.mc_std_error) << '\n';
}

void cmd_grid(const SampleOptions& s, const ResampleOptions& r, std::ostream& out) {
  const SurvivalSample sample = ingest_csv(s.input, s.domain());
  const StepCdf curve = km_fit(sample);
  const SigmaGrid grid = parse_sigma_grid(r.sigma_grid);
  const EstimateTrace trace = grid_estimates(curve, s.p, grid, r.resamples, r.seed, r.h);
  write_or_print(trace_table(grid, trace), r.out_dir, "trace.txt", out);
}

void cmd_select(const std::string& input, std::size_t h, std::ostream& out) {
  const XyTable table = read_xy(input);
  std::vector<double> sigmas;
  EstimateTrace trace{{}, h};
  for (const auto& [x, y] : table.rows) {
    sigmas.push_back(x);
    trace.estimates.push_back(y);
  }
  const SigmaGrid grid(std::move(sigmas));
  const SigmaSelection sel = select_sigma(grid, trace);
  report_selection(out, grid, sel);
  const auto centre = (sel.plateau_lo + sel.plateau_hi) / 2;
  out << "estimate_at_centre " << g6(trace.estimates[centre]) << '\n';
}

void cmd_kde(const SampleOptions& s, const std::string& bandwidth_grid, std::ostream& out) {
  const SurvivalSample sample = ingest_csv(s.input, s.domain());
  const QuantileEstimate q = quantile(km_fit(sample), s.p);
  KdeConfig config;
  if (!bandwidth_grid.empty()) config.bandwidth_grid = parse_bandwidth_grid(bandwidth_grid);
  const KdeEstimate est = kde_estimate(sample, q.q_hat, config);
  out << "n " << sample.size() << '\n'
      << "p " << g6(s.p) << '\n'
      << "q_hat " << g6(q.q_hat) << '\n'
      << "bandwidth " << g6(est.bandwidth) << '\n'
      << "estimate " << g6(est.value) << '\n';
}

std::string law_params(const ScenarioOptions& o) {
  if (o.scenario == "exp") return "rate=" + g6(o.rate);
  return "location=" + g6(o.location) + " scale=" + g6(o.scale);
}

void cmd_simulate(const ScenarioOptions& o, const std::vector<double>& censoring,
                  std::optional<double> sigma, const std::string& sigma_grid, std::size_t h,
                  const std::string& bandwidth_grid, std::ostream& out) {
  SigmaSelector selector{sigma, parse_sigma_grid(sigma_grid), h};
  KdeConfig kde;
  if (!bandwidth_grid.empty()) kde.bandwidth_grid = parse_bandwidth_grid(bandwidth_grid);

  std::vector<ResultLine> lines;
  std::ostringstream meta;
  meta << "scenario " << o.scenario << '\n'
       << "survival " << law_params(o) << '\n'
       << "p " << g6(o.p) << '\n'
       << "master_seed " << o.seed << '\n'
       << "B " << o.resamples << '\n'
       << "replications " << o.reps << '\n'
       << "selector "
       << (sigma ? "fixed sigma=" + g6(*sigma) : "grid " + sigma_grid + " h=" + std::to_string(h))
       << '\n'
       << "variance_convention population\n";

  for (std::size_t n : o.n) {
    for (double c : censoring) {
      ScenarioSpec spec;
      spec.survival = o.law();
      spec.target_censoring = c;
      spec.n = n;
      spec.p = o.p;
      spec.replications = o.reps;
      spec.resamples = o.resamples;
      spec.master_seed = o.seed;
      const ComparisonResult result = run_comparison(spec, selector, kde);
      for (const auto& row : result.rows) lines.push_back({o.scenario, row});
      meta << "cell n=" << n << " censoring=" << format_number("%.2f", c)
           << " censoring_rate=" << g6(result.censoring_rate)
           << " realized_censoring=" << format_number("%.4f", result.realized_censoring)
           << " used=" << result.used_replicates << " excluded=" << result.excluded_replicates
           << '\n';
    }
  }

  const std::string table = format_results_csv(lines);
  const std::filesystem::path dir(o.out_dir);
  write_file(dir / "results.csv", table);
  write_file(dir / "results_meta.txt", meta.str());
  out << table;
}

void cmd_mse_curve(const ScenarioOptions& o, std::optional<double> censoring,
                   std::optional<double> censoring_rate, const std::string& sigma_grid,
                   std::ostream& out) {
  const SigmaGrid grid = parse_sigma_grid(sigma_grid);
  for (std::size_t n : o.n) {
    ScenarioSpec spec;
    spec.survival = o.law();
    spec.n = n;
    spec.p = o.p;
    spec.replications = o.reps;
    spec.resamples = o.resamples;
    spec.master_seed = o.seed;
    if (censoring) {
      spec.target_censoring = *censoring;
    } else {
      spec.censoring_rate = censoring_rate.value_or(0.12);
    }
    const MseCurve curve = mse_curve(spec, grid);
    XyTable table;
    for (const auto& pt : curve.points) table.rows.emplace_back(pt.sigma, pt.mse);
    const std::string name = "data_n" + std::to_string(n) + ".txt";
    emit_xy(table, std::filesystem::path(o.out_dir) / name);
    out << "wrote " << (std::filesystem::path(o.out_dir) / name).string()
        << " excluded=" << curve.excluded_replicates
        << " plateau_points=" << plateau_width(curve.points, 2.0) << '\n';
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Density at a quantile for right-censored data", "qdensity"};
  app.set_config("--config", "", "key/value config file; [command] sections, flags win");
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help message and exit");

  SampleOptions sample_opt;
  ResampleOptions resample_opt;

  auto* estimate = app.add_subcommand("estimate", "resampling estimate with automatic sigma");
  add_sample_options(*estimate, sample_opt);
  add_resample_options(*estimate, resample_opt);
  estimate->add_option("--sigma", resample_opt.sigma, "fixed sigma; skips the grid search");

  auto* grid = app.add_subcommand("grid", "per-sigma estimates over a grid (XY data)");
  add_sample_options(*grid, sample_opt);
  add_resample_options(*grid, resample_opt);

  std::string select_input;
  std::size_t select_h = 20;
  auto* select = app.add_subcommand("select", "plateau selection on an XY trace file");
  select->add_option("--input", select_input, "XY file with columns x (sigma) and y (estimate)")
      ->required();
  select->add_option("--h", select_h, "neighborhood width")->capture_default_str();

  std::string bandwidth_grid;
  auto* kde = app.add_subcommand("kde", "IPCW kernel estimate at the quantile, CV bandwidth");
  add_sample_options(*kde, sample_opt);
  kde->add_option("--bandwidth-grid", bandwidth_grid, "log-spaced bandwidths lo:hi:count");

  ScenarioOptions sim_opt;
  sim_opt.n = {50, 200};
  sim_opt.reps = 500;
  sim_opt.resamples = 1000;
  std::vector<double> sim_censoring{0.1, 0.25, 0.4};
  std::optional<double> sim_sigma;
  std::string sim_grid = "0.05:10:0.05";
  std::size_t sim_h = 20;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo comparison of LS and KDE");
  add_scenario_options(*simulate, sim_opt);
  simulate->add_option("--censoring", sim_censoring, "target censoring fractions")
      ->delimiter(',')
      ->capture_default_str();
  simulate->add_option("--sigma", sim_sigma, "fixed sigma instead of the grid search");
  simulate->add_option("--sigma-grid", sim_grid, "candidate sigmas lo:hi:step")
      ->capture_default_str();
  simulate->add_option("--h", sim_h, "neighborhood width")->capture_default_str();
  simulate->add_option("--bandwidth-grid", bandwidth_grid, "log-spaced bandwidths lo:hi:count");

  ScenarioOptions mse_opt;
  mse_opt.n = {50, 200, 1000};
  mse_opt.reps = 100;
  mse_opt.resamples = 100000;
  std::optional<double> mse_censoring;
  std::optional<double> mse_censoring_rate;
  std::string mse_grid = "0.25:15:0.25";
  auto* mse = app.add_subcommand("mse-curve", "MSE of the resampling estimate versus sigma");
  add_scenario_options(*mse, mse_opt);
  mse->add_option("--censoring", mse_censoring, "target censoring fraction");
  mse->add_option("--censoring-rate", mse_censoring_rate,
                  "exponential censoring rate (default 0.12)");
  mse->add_option("--sigma-grid", mse_grid, "sigmas lo:hi:step")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error[E_USAGE]: " << e.what() << '\n';
    return e.get_exit_code() != 0 ? e.get_exit_code() : 1;
  }

  try {
    if (*estimate) cmd_estimate(sample_opt, resample_opt, out);
    if (*grid) cmd_grid(sample_opt, resample_opt, out);
    if (*select) cmd_select(select_input, select_h, out);
    if (*kde) cmd_kde(sample_opt, bandwidth_grid, out);
    if (*simulate)
      cmd_simulate(sim_opt, sim_censoring, sim_sigma, sim_grid, sim_h, bandwidth_grid, out);
    if (*mse) cmd_mse_curve(mse_opt, mse_censoring, mse_censoring_rate, mse_grid, out);
  } catch (const Error& e) {
    err << "error[" << error_code_name(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error[E_INTERNAL]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"qdensity"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace qdensity::io
