#include <doctest.h>

#include <cmath>
#include <vector>

#include "nelsonlab/correlators.hpp"
#include "nelsonlab/dynamics.hpp"

using namespace nelson;

TEST_SUITE("correlators") {

TEST_CASE("two-time product estimator on a tiny hand-checked ensemble") {
  Ensemble e;
  e.dim = 1;
  e.n_traj = 4;
  e.record_times = {0.0, 1.0};
  e.data = {1.0, 2.0, -1.0, 0.5,   // t = 0
            0.5, -1.0, 2.0, 4.0};  // t = 1
  const Estimate est = mc_two_time(e, 0.0, 1.0);
  // products: 0.5, -2.0, -2.0, 2.0 -> mean -0.375
  CHECK(est.value == doctest::Approx(-0.375).epsilon(1e-15));
  // sample variance 4.2292 (n-1 normalization), stderr = sqrt(var/4)
  const double mean = -0.375;
  const double var = ((0.5 - mean) * (0.5 - mean) + (-2 - mean) * (-2 - mean) +
                      (-2 - mean) * (-2 - mean) + (2 - mean) * (2 - mean)) /
                     3.0;
  CHECK(est.stderr_ == doctest::Approx(std::sqrt(var / 4.0)).epsilon(1e-12));
}

TEST_CASE("closed-form reference correlators") {
  const double s2 = 0.5;
  CHECK(qm_oscillator_correlator(s2, 1.0, 0.0) == cplx(0.5, 0.0));
  const cplx at_half_pi = qm_oscillator_correlator(s2, 1.0, kPi / 2.0);
  CHECK(at_half_pi.real() == doctest::Approx(0.0));
  CHECK(at_half_pi.imag() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(qm_oscillator_correlator(s2, 1.0, kPi).real() == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(qm_pair_correlator(0.495, 1.0, kPi) == doctest::Approx(-0.495).epsilon(1e-12));
  CHECK(sm_oscillator_correlator(s2, 1.0, 2.0) == doctest::Approx(0.5 * std::exp(-2.0)).epsilon(1e-12));
  // scaling: doubling omega halves the decay time
  CHECK(sm_oscillator_correlator(s2, 2.0, 1.0) == doctest::Approx(0.5 * std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("pair-mode cross correlator against the frozen quadrature table") {
  // Values computed independently by high-resolution numerical integration of
  // the two normal-mode flows (frozen; quarter-period sampling, omega = 1,
  // sigma^2 = 0.5, r = 0.99).
  const Physical ph{};
  const double ts[] = {0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.14, 6.28};
  const double want[] = {0.495,     0.414380, 0.320959,  0.131691, 0.008356,
                         -0.016506, -0.004346, 0.016065, 0.021388, 0.000924};
  for (int i = 0; i < 10; ++i)
    CHECK(std::abs(pair_mode_correlator(0.5, 0.99, ph, ts[i]) - want[i]) < 3e-6);

  // at half-period multiples the flow lands exactly on the C12 e^{-omega t}
  // envelope (mode monodromy), independent of r
  const double c12 = 0.99 * 0.5;
  CHECK(std::abs(pair_mode_correlator(0.5, 0.99, ph, kPi) - c12 * std::exp(-kPi)) < 1e-6);
  CHECK(std::abs(pair_mode_correlator(0.5, 0.99, ph, 2.0 * kPi) - c12 * std::exp(-2.0 * kPi)) <
        1e-7);
  CHECK(pair_mode_correlator(0.5, 0.99, ph, 0.0) == doctest::Approx(c12).epsilon(1e-12));
}

TEST_CASE("pair-mode correlator validates its arguments") {
  const Physical ph{};
  CHECK_THROWS_AS((void)pair_mode_correlator(-1.0, 0.5, ph, 1.0), Error);
  CHECK_THROWS_AS((void)pair_mode_correlator(0.5, 1.0, ph, 1.0), Error);
  Physical lopsided{};
  lopsided.omega = {1.0, 2.0};
  CHECK_THROWS_AS((void)pair_mode_correlator(0.5, 0.5, lopsided, 1.0), Error);
}

TEST_CASE("weighted exponential decay fit") {
  std::vector<double> t{0.0, 0.5, 1.0, 2.0}, y, se(4, 0.01);
  for (double tv : t) y.push_back(2.0 * std::exp(-1.3 * tv));
  const DecayFit fit = fit_decay_rate(t, y, se);
  CHECK(fit.rate == doctest::Approx(1.3).epsilon(1e-9));
  CHECK(fit.amplitude == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(fit.rms_z < 1e-9);

  // a mildly perturbed point moves the fit but stays near the truth
  y[1] += 0.015;
  const DecayFit fit2 = fit_decay_rate(t, y, se);
  CHECK(fit2.rate == doctest::Approx(1.3).epsilon(0.05));
  CHECK(fit2.rms_z > 0.1);
}

}  // TEST_SUITE
