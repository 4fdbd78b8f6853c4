#pragma once

#include "nelsonlab/dynamics.hpp"

namespace nelson {

// Empirical-vs-|psi|^2 comparison of one coordinate's marginal at a record time.
struct DensityDiagnostic {
  double time{};
  double ks_statistic{};
  double reference_mass{};  // integral of the reference marginal (should be 1)
  struct Bin {
    double lo{}, hi{};
    std::size_t count{};
    double ref_mass{};
  };
  std::vector<Bin> histogram;
};

// Kolmogorov-Smirnov statistic between the ensemble marginal at record time t
// and the |psi_t|^2 marginal (psi_t must already be the time-t state).
DensityDiagnostic density_check(const Ensemble& ens, const Wavefunction& psi_t, double t,
                                int coord = 0);

// |d rho/dt + div(v rho)| at (x, t): spatial terms exact from the branch
// parameters, time derivative by a central difference of step dt_res. When t
// is within dt_res of psi.time() the evaluation window shifts forward so only
// non-negative propagation durations occur.
double continuity_residual(const Wavefunction& psi, const double* x, double t,
                           double dt_res = 1e-4);

enum class FpDirection { Forward, Backward };

// Signed residual of the forward (+ div(b rho) - nu lap rho) or backward
// (+ div(b* rho) + nu lap rho) Kolmogorov equation, per-coordinate nu_i.
// forward + backward = 2 * signed continuity, identically in exact arithmetic.
double fokker_planck_residual(const Wavefunction& psi, const double* x, double t,
                              FpDirection dir, double dt_res = 1e-4);

}  // namespace nelson
