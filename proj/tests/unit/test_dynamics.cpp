#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "nelsonlab/dynamics.hpp"
#include "nelsonlab/rng.hpp"

using namespace nelson;

namespace {

const Physical kUnit{};

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Ensemble synthetic_ensemble(const std::vector<double>& times,
                            const std::vector<std::vector<double>>& slices) {
  Ensemble e;
  e.dim = 1;
  e.n_traj = slices.front().size();
  e.record_times = times;
  for (const auto& s : slices) e.data.insert(e.data.end(), s.begin(), s.end());
  return e;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("single Euler step reproduces the addressed increment exactly") {
  AnalyticDrift none(1, [](const double*, double, double* b) { b[0] = 0.0; });
  SdeConfig cfg;
  cfg.dt = 0.25;
  cfg.t_end = 0.25;
  cfg.seed = 17;
  const double x0[1] = {0.4};
  const Trajectory tr = integrate(none, kUnit, x0, cfg, 5);
  double z[2];
  rng::normal_pair(17, 5, 0, rng::kWiener, z);
  CHECK(tr.positions.back() == 0.4 + std::sqrt(2.0 * 0.5 * 0.25) * z[0]);
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == doctest::Approx(0.25));
}

TEST_CASE("integration grid must divide the horizon") {
  AnalyticDrift none(1, [](const double*, double, double* b) { b[0] = 0.0; });
  SdeConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.0005;
  const double x0[1] = {0.0};
  CHECK_THROWS_WITH_AS((void)integrate(none, kUnit, x0, cfg, 0),
                       doctest::Contains("off-grid"), Error);
}

TEST_CASE("Ornstein-Uhlenbeck relaxation statistics") {
  AnalyticDrift ou(1, [](const double* x, double, double* b) { b[0] = -x[0]; });
  SdeConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 1.0;
  cfg.seed = 3;
  const std::size_t n = 2000;
  double s1 = 0, s2 = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double x0[1] = {1.0};
    const Trajectory tr = integrate(ou, kUnit, x0, cfg, j);
    const double xe = tr.positions.back();
    s1 += xe;
    s2 += xe * xe;
  }
  const double mean = s1 / double(n);
  const double var = (s2 - double(n) * mean * mean) / double(n - 1);
  const double m_ref = std::exp(-1.0);
  const double v_ref = 0.5 * (1.0 - std::exp(-2.0));
  CHECK(std::abs(mean - m_ref) < 3.0 * std::sqrt(v_ref / double(n)));
  CHECK(std::abs(var - v_ref) < 3.0 * v_ref * std::sqrt(2.0 / double(n - 1)));
}

TEST_CASE("runaway drift is clamped and counted") {
  AnalyticDrift big(1, [](const double*, double, double* b) { b[0] = 1e9; });
  SdeConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 4e-3;
  cfg.b_max = 1e5;
  const double x0[1] = {0.0};
  const Trajectory tr = integrate(big, kUnit, x0, cfg, 0);
  CHECK(tr.clamp_events == 4);
  CHECK(std::abs(tr.positions.back()) < 4.0 * 1e5 * cfg.dt + 1.0);
}

TEST_CASE("initial sampling: exact single-Gaussian draws") {
  const Wavefunction g = make_ground_state(1.0, 1.0, 1.0);
  const auto xs = sample_initial(g, 5000, 11);
  REQUIRE(xs.size() == 5000);
  double z[2];
  rng::normal_pair(11, 0, 0, rng::kInitGauss, z);
  CHECK(xs[0] == std::sqrt(0.5) * z[0]);  // mean 0, sd sigma
  const auto again = sample_initial(g, 5000, 11);
  CHECK(xs == again);
  double s1 = 0, s2 = 0;
  for (double x : xs) {
    s1 += x;
    s2 += x * x;
  }
  const double mean = s1 / 5000.0, var = s2 / 5000.0 - mean * mean;
  CHECK(std::abs(mean) < 3.0 * std::sqrt(0.5 / 5000.0));
  CHECK(var == doctest::Approx(0.5).epsilon(0.06));
}

TEST_CASE("initial sampling: two-branch mixture matches its own distribution") {
  // weights 1/4 and 3/4 on well-separated unit-variance/2 Gaussians at -3, +3
  auto branch = [](double c, double weight) {
    GaussianBranch b;
    b.quad.a00 = -0.5;
    b.lin[0] = c;  // center = c for quad -1/2 (density exponent -(x-c)^2 + c^2)
    b.log_amp = 0.5 * (std::log(weight) - c * c - 0.5 * std::log(kPi));
    return b;
  };
  const Wavefunction mix(1, kUnit, {branch(-3.0, 0.25), branch(3.0, 0.75)}, 0.0);
  CHECK(norm_squared(mix) == doctest::Approx(1.0).epsilon(1e-3));  // ~1e-4 branch overlap

  const std::size_t n = 20000;
  auto xs = sample_initial(mix, n, 4);
  const double frac_left =
      double(std::count_if(xs.begin(), xs.end(), [](double x) { return x < 0.0; })) / double(n);
  CHECK(std::abs(frac_left - 0.25) < 3.0 * std::sqrt(0.25 * 0.75 / double(n)));

  std::sort(xs.begin(), xs.end());
  double ks = 0.0;
  const double sig = std::sqrt(0.5);
  for (std::size_t i = 0; i < n; ++i) {
    const double F = 0.25 * norm_cdf((xs[i] + 3.0) / sig) + 0.75 * norm_cdf((xs[i] - 3.0) / sig);
    ks = std::max(ks, std::max(std::abs(F - double(i) / n), std::abs(F - double(i + 1) / n)));
  }
  CHECK(ks < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("OU quadrature equals the explicit exponential sum") {
  const double dw[3] = {0.1, -0.2, 0.05};
  const double h = 0.2, om = 1.7, x0 = 0.9;
  const double got = quadrature_ou_path(x0, {dw, 3}, om, h);
  const double want = std::exp(-3 * om * h) * (x0 + dw[0]) +
                      std::exp(-2 * om * h) * dw[1] + std::exp(-om * h) * dw[2];
  CHECK(got == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("collapsed-path quadrature: explicit sum, mirror, and flags") {
  std::vector<double> dw(400);
  for (std::size_t k = 0; k < dw.size(); ++k) {
    double z[2];
    rng::normal_pair(8, 0, std::uint32_t(k), rng::kScatter, z);
    dw[k] = 0.1 * z[0];
  }
  const double om = 1.3, s = 0.2, dt = 0.01;

  SUBCASE("interior value matches the direct formula") {
    const double t = s + 0.5;
    const QuadratureResult q = quadrature_collapsed_path(1.0, 1.0, dw, om, s, t, dt);
    // dw[0] carries the exact first-step flow (weight 1/sin(omega dt)); later
    // increments enter at their left endpoints
    double sum = dw[0] / std::sin(om * dt);
    for (int k = 1; k < 50; ++k) sum += dw[std::size_t(k)] / std::sin(om * k * dt);
    const double want = std::cos(om * 0.5) + std::sin(om * 0.5) * sum;
    CHECK(q.value == doctest::Approx(want).epsilon(1e-12));
    CHECK_FALSE(q.singular_window);
  }

  SUBCASE("half-period mirror is exact, caustic crossings are flagged") {
    std::vector<double> long_dw(3500, 0.01);
    const QuadratureResult q =
        quadrature_collapsed_path(0.7, 0.7, long_dw, 1.0, 0.0, kPi, 1e-3);
    CHECK(q.value == -0.7);
    const QuadratureResult past =
        quadrature_collapsed_path(0.7, 0.7, long_dw, 1.0, 0.0, 3.2, 1e-3);
    CHECK(past.singular_window);
  }

  SUBCASE("start must sit on the collapse center") {
    CHECK_THROWS_AS((void)quadrature_collapsed_path(1.0, 0.9, dw, om, s, s + 0.1, dt), Error);
  }
}

TEST_CASE("record lookup rejects unknown times") {
  const Ensemble e = synthetic_ensemble({0.0, 1.0}, {{0.0}, {1.0}});
  CHECK(e.record_index(1.0) == 1);
  CHECK_THROWS_WITH_AS((void)e.record_index(0.5), doctest::Contains("off-grid"), Error);
}

TEST_CASE("conditional mean-derivative estimators on constructed data") {
  const std::size_t n = 1000;
  std::vector<double> x0(n), x1(n), x2(n);
  for (std::size_t j = 0; j < n; ++j) {
    // deterministic, shuffled positions spanning [-2, 2]
    const double x = -2.0 + 4.0 * double((j * 617) % n) / double(n - 1);
    x0[j] = x;
    const double g = 2.0 * x + 1.0;
    const double dt = 0.5;
    x1[j] = x + dt * g;
    x2[j] = x + 2.0 * dt * g + dt * dt * (5.0 - x);
  }
  const Ensemble e = synthetic_ensemble({2.0, 2.5, 3.0}, {x0, x1, x2});

  const auto fwd = estimate_mean_derivative(e, 2.0, 0.5, DerivDirection::Forward, 1);
  REQUIRE(fwd.size() == 20);
  std::size_t total = 0;
  for (const auto& b : fwd) {
    CHECK(b.value == doctest::Approx(2.0 * b.x + 1.0).epsilon(1e-12));
    total += b.count;
  }
  CHECK(total == n);
  CHECK(std::is_sorted(fwd.begin(), fwd.end(),
                       [](const BinEstimate& a, const BinEstimate& b) { return a.x < b.x; }));

  // conditioning happens at the estimator's base time t
  const auto bwd = estimate_mean_derivative(e, 2.5, 0.5, DerivDirection::Backward, 1);
  for (const auto& b : bwd) {
    const double x_at_2 = (b.x - 0.5) / 2.0;  // invert y = 2x + 0.5
    CHECK(b.value == doctest::Approx(2.0 * x_at_2 + 1.0).epsilon(1e-12));
  }

  const auto itr = estimate_mean_derivative(e, 2.0, 0.5, DerivDirection::Forward, 2);
  for (const auto& b : itr) CHECK(b.value == doctest::Approx(5.0 - b.x).epsilon(1e-10));

  CHECK_THROWS_AS(
      (void)estimate_mean_derivative(e, 2.5, 0.5, DerivDirection::Forward, 2), Error);
}

}  // TEST_SUITE
