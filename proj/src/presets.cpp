#include "nelsonlab/presets.hpp"

#include <cmath>

namespace nelson {

namespace {

const std::vector<PresetInfo>& table() {
  static const std::vector<PresetInfo> presets = [] {
    std::vector<PresetInfo> t;
    {
      PresetInfo p;
      p.name = "oscillator-unmeasured";
      p.blurb = "ground-state oscillator, no measurement: E[X(0)X(t)] decays as exp(-omega t)";
      p.family = PresetInfo::Family::Oscillator;
      p.default_lags = {0.0, 0.5, 1.0, 2.0, kPi};
      p.default_t_end = kPi;
      p.sm_verdict = true;
      t.push_back(std::move(p));
    }
    {
      PresetInfo p;
      p.name = "oscillator-measured-at-0";
      p.blurb = "position measured at t=0: correlator follows the quantum result at t = n pi / omega";
      p.family = PresetInfo::Family::Oscillator;
      p.measured = true;
      p.meas_coords = {0};
      p.default_lags = {0.0, kPi, 2.0 * kPi};
      p.default_t_end = 2.0 * kPi;
      p.qm_tol_factor = 0.2;
      t.push_back(std::move(p));
    }
    {
      PresetInfo p;
      p.name = "double-slit";
      p.blurb = "free-particle two-packet superposition; branch selection once the packets separate";
      p.family = PresetInfo::Family::FreeSlit;
      p.default_lags = {0.0, 0.75, 1.5};
      p.default_t_end = 1.5;
      p.scales_with_omega = false;
      t.push_back(std::move(p));
    }
    {
      PresetInfo p;
      p.name = "entangled-pair-unmeasured";
      p.blurb = "correlated oscillator pair, no measurement: cross-correlator decays";
      p.family = PresetInfo::Family::Pair;
      p.default_lags = {0.0, kPi, 2.0 * kPi};
      p.default_t_end = 2.0 * kPi;
      p.sm_verdict = true;
      t.push_back(std::move(p));
    }
    {
      PresetInfo p;
      p.name = "entangled-pair-measured";
      p.blurb = "particle 1 measured at t=0: cross-correlator follows C12 cos(omega t)";
      p.family = PresetInfo::Family::Pair;
      p.measured = true;
      p.meas_coords = {0};
      p.default_lags = {0.0, kPi, 2.0 * kPi};
      p.default_t_end = 2.0 * kPi;
      p.qm_tol_factor = 0.4;
      t.push_back(std::move(p));
    }
    return t;
  }();
  return presets;
}

}  // namespace

std::span<const PresetInfo> all_presets() { return table(); }

const PresetInfo* find_preset(std::string_view name) {
  for (const PresetInfo& p : table())
    if (p.name == name) return &p;
  return nullptr;
}

ExperimentSpec build_spec(const PresetInfo& info, const Physical& ph, double collapse_width) {
  switch (info.family) {
    case PresetInfo::Family::Oscillator: {
      ExperimentSpec spec{make_ground_state(ph.mass[0], ph.omega[0], ph.hbar), {}, {}};
      if (info.measured)
        spec.measurements.push_back({0.0, info.meas_coords, collapse_width});
      return spec;
    }
    case PresetInfo::Family::Pair: {
      Physical p2 = ph;
      p2.mass[1] = p2.mass[0];
      p2.omega[1] = p2.omega[0];
      const double sigma2 = ground_sigma2(p2, 0);
      ExperimentSpec spec{make_pair_state(sigma2, kPairCorrelation, p2), {}, {}};
      if (info.measured)
        spec.measurements.push_back({0.0, info.meas_coords, collapse_width});
      return spec;
    }
    case PresetInfo::Family::FreeSlit: {
      if (ph.omega[0] != 0.0)
        throw Error("invalid-state: double-slit is a free-particle preset (omega must be 0)");
      const double w2 = kSlitWidth * kSlitWidth;
      std::vector<GaussianBranch> branches;
      for (const double side : {-1.0, 1.0}) {
        GaussianBranch g;
        g.quad.a00 = -1.0 / (4.0 * w2);
        const double c = side * kSlitCenter;
        const double p = side * kSlitKickSpeed * ph.mass[0];  // outward momentum
        g.lin[0] = cplx(c / (2.0 * w2), p / ph.hbar);
        g.log_amp = cplx(-c * c / (4.0 * w2) - 0.25 * std::log(2.0 * kPi * w2) -
                             0.5 * std::log(2.0),
                         0.0);
        branches.push_back(g);
      }
      Wavefunction psi0 = normalized(Wavefunction(1, ph, std::move(branches), 0.0));
      ExperimentSpec spec{std::move(psi0), {}, {kSlitSelectionTime, kSlitSelectionEps}};
      return spec;
    }
  }
  throw Error("invalid-state: unknown preset family");
}

}  // namespace nelson
