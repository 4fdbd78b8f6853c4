#pragma once

#include <string_view>

#include "nelsonlab/measurement.hpp"

namespace nelson {

// The built-in experiment catalogue. Time-like entries of oscillator presets
// are stored in phase units (multiples of 1/omega0); the free-particle
// double-slit preset uses absolute times.
struct PresetInfo {
  enum class Family { Oscillator, Pair, FreeSlit };

  std::string_view name;
  std::string_view blurb;
  Family family{Family::Oscillator};
  bool measured{false};
  std::vector<int> meas_coords;       // coordinates measured at t = 0
  std::vector<double> default_lags;   // correlation lags to report
  double default_t_end{};
  bool scales_with_omega{true};
  // Verdict policy: sm_verdict compares against the no-collapse prediction at
  // every lag; qm_tol_factor >= 0 compares against the quantum reference at
  // commuting lags (omega t = n pi) with tolerance 3 se + factor * (w / sigma).
  bool sm_verdict{false};
  double qm_tol_factor{-1.0};

  int dim() const { return family == Family::Pair ? 2 : 1; }
  // correlator coordinates: cross-correlator for the pair, autocorrelator else
  int corr_c1() const { return 0; }
  int corr_c2() const { return family == Family::Pair ? 1 : 0; }
};

// Initial cross-correlation of the entangled pair. A perfectly correlated
// Gaussian is not normalizable, so the preset uses a near-perfect value.
inline constexpr double kPairCorrelation = 0.99;

// Double-slit geometry: packets of |psi|^2 width 0.5 at +-1 kicked outward
// with speed 8; branches separate by many widths before the selection time.
inline constexpr double kSlitCenter = 1.0;
inline constexpr double kSlitWidth = 0.5;
inline constexpr double kSlitKickSpeed = 8.0;
inline constexpr double kSlitSelectionTime = 1.0;
inline constexpr double kSlitSelectionEps = 1e-8;

std::span<const PresetInfo> all_presets();
const PresetInfo* find_preset(std::string_view name);  // nullptr when unknown

// Materialize the preset's initial state, measurement schedule and selection
// plan for the given physical parameters. collapse_width applies to measured
// presets; FreeSlit requires omega[0] == 0.
ExperimentSpec build_spec(const PresetInfo& info, const Physical& ph, double collapse_width);

}  // namespace nelson
