#include <doctest.h>

#include <cmath>

#include "nelsonlab/wavefunction.hpp"

using namespace nelson;

namespace {

const Physical kUnit{};                          // m = omega = hbar = 1
const Physical kFree{{1.0, 1.0}, {0.0, 0.0}, 1.0};

// Log-density of a Gaussian state is quadratic; recover its center and
// variance from the gradient at two points. Independent of the branch
// parameter bookkeeping being probed.
struct GaussShape {
  double center, var;
};
GaussShape shape_1d(const Wavefunction& psi) {
  const double xa[2] = {0.1, 0.0}, xb[2] = {0.9, 0.0};
  const double ga = density_log_gradient(psi, xa)[0];
  const double gb = density_log_gradient(psi, xb)[0];
  const double slope = (gb - ga) / (xb[0] - xa[0]);  // -1/var
  const double var = -1.0 / slope;
  return {xa[0] + ga * var, var};
}

Wavefunction kicked_packet(double c0, double w, double p) {
  GaussianBranch g;
  g.quad.a00 = -1.0 / (4.0 * w * w);
  g.lin[0] = cplx(c0 / (2.0 * w * w), p);
  g.log_amp = cplx(-c0 * c0 / (4.0 * w * w) - 0.25 * std::log(2.0 * kPi * w * w), 0.0);
  return Wavefunction(1, kFree, {g}, 0.0);
}

}  // namespace

TEST_SUITE("wavefunction") {

TEST_CASE("ground state: closed-form density and unit norm") {
  const Wavefunction g = make_ground_state(1.0, 1.0, 1.0);
  CHECK(norm_squared(g) == doctest::Approx(1.0).epsilon(1e-12));
  const double x[2] = {0.7, 0.0};
  const cplx lv = log_evaluate(g, x);
  CHECK(lv.real() == doctest::Approx(-0.25 * std::log(kPi) - 0.5 * 0.49).epsilon(1e-13));
  CHECK(lv.imag() == doctest::Approx(0.0));
  CHECK(std::abs(evaluate(g, x) - std::exp(lv)) < 1e-14);
}

TEST_CASE("ground state is stationary up to the energy phase") {
  const Wavefunction g = make_ground_state(1.0, 1.0, 1.0);
  for (const double t : {0.17, 1.5707963, 4.9}) {  // includes a caustic crossing
    const Wavefunction gt = propagate(g, t);
    CHECK(gt.time() == doctest::Approx(t));
    for (const double xv : {-1.1, 0.0, 0.6}) {
      const double x[2] = {xv, 0.0};
      const cplx ratio = evaluate(gt, x) / evaluate(g, x);
      CHECK(std::abs(ratio - std::exp(cplx(0.0, -0.5 * t))) < 1e-12);  // E0 = hbar w / 2
    }
  }
}

TEST_CASE("narrow packet follows the classical oscillator flow") {
  const double X0 = 1.0, w = 0.1;
  const double x0[1] = {X0};
  const Wavefunction psi0 = make_collapsed_state({x0, 1}, w, kUnit);
  CHECK(norm_squared(psi0) == doctest::Approx(1.0).epsilon(1e-12));
  {
    const GaussShape s = shape_1d(psi0);
    CHECK(s.center == doctest::Approx(X0).epsilon(1e-12));
    CHECK(s.var == doctest::Approx(w * w).epsilon(1e-12));
  }
  for (const double t : {0.3, 1.2, 2.0, 3.9}) {
    const Wavefunction psi = propagate(psi0, t);
    const double c = X0 * std::cos(t);
    const double var = w * w * std::pow(std::cos(t), 2) + std::pow(std::sin(t), 2) / (4 * w * w);
    const GaussShape s = shape_1d(psi);
    CHECK(s.center == doctest::Approx(c).epsilon(1e-10));
    CHECK(s.var == doctest::Approx(var).epsilon(1e-10));
    CHECK(norm_squared(psi) == doctest::Approx(1.0).epsilon(1e-10));
    // probability current at the center moves with the classical velocity
    const double xc[2] = {c, 0.0};
    const double v = velocity_field(psi, xc, VelocityKind::Current).v[0];
    CHECK(v == doctest::Approx(-X0 * std::sin(t)).epsilon(1e-9));
  }
}

TEST_CASE("free packet: ballistic center, spreading variance") {
  const double c0 = -1.0, w = 0.5, p = 8.0;
  const Wavefunction psi0 = kicked_packet(c0, w, p);
  CHECK(norm_squared(psi0) == doctest::Approx(1.0).epsilon(1e-12));
  for (const double t : {0.2, 1.0}) {
    const Wavefunction psi = propagate(psi0, t);
    const GaussShape s = shape_1d(psi);
    CHECK(s.center == doctest::Approx(c0 + p * t).epsilon(1e-11));
    CHECK(s.var == doctest::Approx(w * w + t * t / (4 * w * w)).epsilon(1e-11));
  }
}

TEST_CASE("propagation composes across caustics") {
  const double x0[1] = {0.8};
  const Wavefunction psi0 = make_collapsed_state({x0, 1}, 0.2, kUnit);
  const Wavefunction once = propagate(psi0, 3.5);                  // crosses pi/2 and pi
  const Wavefunction twice = propagate(propagate(psi0, 1.0), 2.5);
  for (const double xv : {-0.5, 0.3, 1.2}) {
    const double x[2] = {xv, 0.0};
    const cplx a = evaluate(once, x), b = evaluate(twice, x);
    CHECK(std::abs(a - b) < 1e-12 * std::abs(a));
  }
}

TEST_CASE("pair state: correlated Gaussian gradients and unit norm") {
  const double s2 = 0.5, r = 0.99;
  const Wavefunction pr = make_pair_state(s2, r, kUnit);
  CHECK(pr.dim() == 2);
  CHECK(norm_squared(pr) == doctest::Approx(1.0).epsilon(1e-12));
  const double det = s2 * s2 * (1.0 - r * r);
  for (const auto& pt : {std::pair{0.3, -0.2}, {1.0, 1.1}}) {
    const double x[2] = {pt.first, pt.second};
    const auto g = density_log_gradient(pr, x);
    // grad log rho = -C^{-1} x with C = s2 [[1, r], [r, 1]]
    CHECK(g[0] == doctest::Approx(-(s2 * x[0] - r * s2 * x[1]) / det).epsilon(1e-11));
    CHECK(g[1] == doctest::Approx(-(s2 * x[1] - r * s2 * x[0]) / det).epsilon(1e-11));
  }
  const Wavefunction pr2 = propagate(pr, 2.9);  // d = 2 composition across a caustic
  const Wavefunction pr2b = propagate(propagate(pr, 1.3), 1.6);
  const double x[2] = {0.4, -0.1};
  CHECK(std::abs(evaluate(pr2, x) - evaluate(pr2b, x)) < 1e-12 * std::abs(evaluate(pr2, x)));
}

TEST_CASE("marginal density integrates to one") {
  const Wavefunction pr = make_pair_state(0.5, 0.99, kUnit);
  const ExpSum1D marg = marginal_density(pr, 1);
  const double lo = -6.0, hi = 6.0;
  const int n = 4000;
  double acc = 0.5 * (marg(lo) + marg(hi));
  for (int i = 1; i < n; ++i) acc += marg(lo + (hi - lo) * i / n);
  acc *= (hi - lo) / n;
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-8));
  // the marginal of a sigma2-correlated pair is the sigma2 Gaussian itself
  CHECK(marg(0.3) == doctest::Approx(std::exp(-0.09) / std::sqrt(kPi)).epsilon(1e-10));
}

TEST_CASE("drift identities and near-node detection") {
  const double x0[1] = {1.0};
  const Wavefunction psi = propagate(make_collapsed_state({x0, 1}, 0.1, kUnit), 0.7);
  const double x[2] = {0.4, 0.0};
  const double b = velocity_field(psi, x, VelocityKind::ForwardDrift).v[0];
  const double bs = velocity_field(psi, x, VelocityKind::BackwardDrift).v[0];
  const double v = velocity_field(psi, x, VelocityKind::Current).v[0];
  const double u = velocity_field(psi, x, VelocityKind::Osmotic).v[0];
  CHECK(b == doctest::Approx(v + u).epsilon(1e-13));
  CHECK(bs == doctest::Approx(v - u).epsilon(1e-13));
  CHECK(u == doctest::Approx(0.5 * density_log_gradient(psi, x)[0]).epsilon(1e-11));

  // odd superposition has a node at the origin
  GaussianBranch gl, gr;
  gl.quad.a00 = gr.quad.a00 = -0.5;
  gl.lin[0] = -1.5;
  gr.lin[0] = 1.5;
  gl.log_amp = cplx(0.0, 0.0);
  gr.log_amp = cplx(0.0, kPi);  // relative minus sign
  const Wavefunction odd = normalized(Wavefunction(1, kUnit, {gl, gr}, 0.0));
  const double node[2] = {0.0, 0.0};
  CHECK(velocity_field(odd, node, VelocityKind::ForwardDrift).near_node);
  const double off[2] = {1.4, 0.0};
  CHECK_FALSE(velocity_field(odd, off, VelocityKind::ForwardDrift).near_node);
  // deep tail of a single Gaussian also counts as node-like
  const double far[2] = {13.0, 0.0};
  CHECK(log_derivatives(make_ground_state(1.0, 1.0, 1.0), far).near_node);
}

TEST_CASE("propagate rejects negative durations") {
  const Wavefunction g = make_ground_state(1.0, 1.0, 1.0);
  CHECK_THROWS_AS((void)propagate(g, -0.1), Error);
}

}  // TEST_SUITE
