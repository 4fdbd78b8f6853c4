#pragma once

#include "nelsonlab/dynamics.hpp"

namespace nelson {

struct Estimate {
  double value{};
  double stderr_{};
};

// Sample mean of X_{c1}(t1) * X_{c2}(t2) with CLT standard error. Both times
// must be record times of the ensemble (no interpolation); symmetric in its
// arguments by construction (same samples).
Estimate mc_two_time(const Ensemble& ens, double t1, double t2, int c1 = 0, int c2 = 0);

// Ground-state Heisenberg two-time function <x(0) x(t)> = sigma2 e^{+i omega0 t};
// real and equal to (-1)^n sigma2 exactly at t = n pi / omega0, where the
// equal-time commutator contribution vanishes.
cplx qm_oscillator_correlator(double sigma2, double omega0, double t);

// Cross correlator <x1(0) x2(t)> = c12 cos(omega0 t) for a real bivariate
// Gaussian state with initial cross-covariance c12 (the <x p> term vanishes).
double qm_pair_correlator(double c12, double omega0, double t);

// Stochastic-mechanics prediction for the unmeasured ground state:
// E[X(0) X(t)] = sigma2 e^{-omega0 t}, t >= 0.
double sm_oscillator_correlator(double sigma2, double omega0, double t);

// Stochastic-mechanics prediction E[X1(0) X2(t)] for the unmeasured
// correlated pair, via the exact normal-mode flow: each mode (x1 +- x2)/sqrt(2)
// is a 1D Gaussian state of variance sigma2 (1 +- r) whose conditional mean
// obeys dPhi/dt = alpha(t) Phi with alpha read off the propagated quadratic
// coefficient. Returns (v+ Phi+ - v- Phi-) / 2.
double pair_mode_correlator(double sigma2, double r, const Physical& ph, double t);

struct DecayFit {
  double rate{};
  double amplitude{};
  double rms_z{};  // weighted RMS residual of the fit, in stderr units
};

// Weighted least-squares fit of y ~ amplitude * e^{-rate t} (Gauss-Newton
// with step halving; initialized from the first/last log ratio).
DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> y,
                        std::span<const double> se);

}  // namespace nelson
