#include <doctest.h>

#include <cmath>

#include "nelsonlab/equilibrium.hpp"
#include "nelsonlab/rng.hpp"

using namespace nelson;

namespace {
const Physical kUnit{};
}

TEST_SUITE("equilibrium") {

TEST_CASE("stationary state satisfies every residual identity to roundoff") {
  const Wavefunction g = make_ground_state(1.0, 1.0, 1.0);
  for (const double xv : {-1.0, -0.3, 0.0, 0.4, 1.2}) {
    const double x[2] = {xv, 0.0};
    CHECK(continuity_residual(g, x, 0.5) < 1e-8);
    CHECK(hjm_residual(g, x, 0.5) < 1e-8);
    CHECK(std::abs(fokker_planck_residual(g, x, 0.5, FpDirection::Forward)) < 1e-8);
    CHECK(std::abs(fokker_planck_residual(g, x, 0.5, FpDirection::Backward)) < 1e-8);
  }
}

TEST_CASE("residuals vanish quadratically in the probing time step") {
  const double x0[1] = {1.0};
  const Wavefunction psi = propagate(make_collapsed_state({x0, 1}, 0.1, kUnit), 0.4);
  const double x[2] = {0.6, 0.0};
  const double t = 0.41;
  const double c1 = continuity_residual(psi, x, t, 1e-4);
  const double c2 = continuity_residual(psi, x, t, 5e-5);
  CHECK(c1 / c2 == doctest::Approx(4.0).epsilon(0.15));
  const double h1 = hjm_residual(psi, x, t, 1e-4);
  const double h2 = hjm_residual(psi, x, t, 5e-5);
  CHECK(h1 / h2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("the two one-sided equations bracket continuity") {
  const double x0[1] = {0.5};
  const Wavefunction psi = propagate(make_collapsed_state({x0, 1}, 0.15, kUnit), 0.9);
  for (const double xv : {-0.8, 0.0, 0.7}) {
    const double x[2] = {xv, 0.0};
    const double f = fokker_planck_residual(psi, x, 0.95, FpDirection::Forward);
    const double b = fokker_planck_residual(psi, x, 0.95, FpDirection::Backward);
    const double c = continuity_residual(psi, x, 0.95);
    CHECK(std::abs(std::abs(f + b) - 2.0 * c) < 1e-10);
  }
}

TEST_CASE("residuals refuse to evaluate below the density floor") {
  const Wavefunction g = make_ground_state(1.0, 1.0, 1.0);
  const double far[2] = {13.0, 0.0};
  CHECK_THROWS_WITH_AS((void)continuity_residual(g, far, 0.5), doctest::Contains("near-node"),
                       Error);
}

TEST_CASE("density check against exact Gaussian sampling") {
  const std::size_t n = 20000;
  Ensemble e;
  e.dim = 1;
  e.n_traj = n;
  e.record_times = {0.0};
  e.data.resize(n);
  const double sig = std::sqrt(0.5);
  for (std::size_t j = 0; j < n; ++j) {
    double z[2];
    rng::normal_pair(31, std::uint32_t(j), 0, rng::kScatter, z);
    e.data[j] = sig * z[0];
  }
  const Wavefunction g = make_ground_state(1.0, 1.0, 1.0);
  const DensityDiagnostic diag = density_check(e, g, 0.0);
  CHECK(diag.ks_statistic < 4.0 / std::sqrt(double(n)));
  CHECK(diag.reference_mass == doctest::Approx(1.0).epsilon(1e-6));
  std::size_t hist_n = 0;
  double hist_mass = 0.0;
  for (const auto& cell : diag.histogram) {
    hist_n += cell.count;
    hist_mass += cell.ref_mass;
  }
  CHECK(hist_n == n);
  CHECK(hist_mass == doctest::Approx(1.0).epsilon(1e-3));  // samples span most of the line
  CHECK(diag.time == 0.0);

  // a displaced reference is decisively rejected
  const double x0[1] = {1.0};
  const Wavefunction shifted = make_collapsed_state({x0, 1}, sig, kUnit);
  const DensityDiagnostic bad = density_check(e, shifted, 0.0);
  CHECK(bad.ks_statistic > 0.3);
}

TEST_CASE("density check demands a matching evaluation time") {
  Ensemble e;
  e.dim = 1;
  e.n_traj = 2;
  e.record_times = {0.0};
  e.data = {0.1, -0.2};
  const Wavefunction g = make_ground_state(1.0, 1.0, 1.0);
  CHECK_THROWS_AS((void)density_check(e, propagate(g, 1.0), 0.0), Error);
  CHECK_THROWS_AS((void)density_check(e, g, 0.5), Error);  // not a record time
}

}  // TEST_SUITE
