#pragma once

#include <ostream>

#include "nelsonlab/presets.hpp"
#include "nelsonlab/report.hpp"

namespace nelson {

// Raw `run` settings; negative / empty sentinels mean "preset default".
struct RunConfig {
  std::string preset;
  double mass{1.0};
  double omega{-1.0};  // default: 1 for oscillator presets, 0 for double-slit
  double hbar{1.0};
  std::size_t n_traj{100000};
  double dt{-1.0};     // default: 1e-3 / omega (absolute 1e-3 for double-slit)
  double t_end{-1.0};  // default: per preset
  std::uint64_t seed{1};
  double b_max{1e5};
  double collapse_width{-1.0};  // default: 0.05 sigma
  std::string lags;             // comma list; entries may end in "pi" (scaled by 1/omega)
  int threads{0};
  std::string out;  // default: <preset>.csv
  bool no_timestamp{false};
  int verbosity{1};
};

// Parse `run` arguments (preset name plus flags, optionally --config FILE).
// Flags override file values; unknown config keys are hard errors. Throws
// nelson::Error with the offending flag named.
RunConfig parse_config(const std::vector<std::string>& args);

// Lag token list -> absolute times: "pi", "2pi", "<num>pi" are phase values
// scaled by 1/omega; plain numbers are absolute.
std::vector<double> parse_lag_list(const std::string& raw, double omega);

// Fully resolved settings (also echoed into the CSV config line).
struct ResolvedRun {
  const PresetInfo* info{};
  Physical ph;
  double sigma2{};  // ground width of coordinate 0 (oscillator families)
  double collapse_width{};
  SdeConfig sde;
  std::vector<double> lags;  // absolute, ascending, unique
  std::string out;
  std::string config_line;
  int verbosity{1};
  bool no_timestamp{false};
};

ResolvedRun resolve(const RunConfig& cfg);

// Run the ensemble and assemble the verdict table (no I/O).
RunReport execute(const ResolvedRun& rr);

// `run` driver: execute, write the CSV, print the table. 0 iff every
// applicable verdict is PASS.
int run_preset(const RunConfig& cfg, std::ostream& log);

// Full command dispatcher (run / list-presets / check).
int cli_main(int argc, const char* const* argv);

}  // namespace nelson
