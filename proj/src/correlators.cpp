#include "nelsonlab/correlators.hpp"

#include <algorithm>
#include <cmath>

namespace nelson {

Estimate mc_two_time(const Ensemble& ens, double t1, double t2, int c1, int c2) {
  if (c1 < 0 || c1 >= ens.dim || c2 < 0 || c2 >= ens.dim)
    throw Error("invalid-state: coordinate out of range");
  const auto a = ens.slice(ens.record_index(t1), c1);
  const auto b = ens.slice(ens.record_index(t2), c2);
  const std::size_t n = ens.n_traj;
  if (n < 2) throw Error("invalid-state: need at least two trajectories");

  double s = 0.0, s2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double p = a[j] * b[j];
    s += p;
    s2 += p * p;
  }
  const double mean = s / double(n);
  const double var = std::max(0.0, (s2 - double(n) * mean * mean) / double(n - 1));
  return {mean, std::sqrt(var / double(n))};
}

cplx qm_oscillator_correlator(double sigma2, double omega0, double t) {
  return sigma2 * std::exp(cplx(0.0, omega0 * t));
}

double qm_pair_correlator(double c12, double omega0, double t) {
  return c12 * std::cos(omega0 * t);
}

double sm_oscillator_correlator(double sigma2, double omega0, double t) {
  if (t < 0.0) throw Error("invalid-state: lag must be non-negative");
  return sigma2 * std::exp(-omega0 * t);
}

namespace {

// Conditional-mean flow factor Phi(t) of a 1D Gaussian state with initial
// variance v: dPhi/dt = alpha(t) Phi, alpha = (hbar/m)(Re+Im)(2 Q(t)).
// Q(t) is exact (closed-form propagation); Phi integrates by RK4.
double mode_flow(double v, const Physical& ph1, double t) {
  if (t == 0.0) return 1.0;
  Wavefunction psi(1, ph1,
                   {GaussianBranch{{cplx(-0.25 / v, 0.0), 0.0, 0.0},
                                   {},
                                   cplx(-0.25 * std::log(2.0 * kPi * v), 0.0)}},
                   0.0);
  const int n = std::max(1, int(std::ceil(t / 5e-4)));
  const double h = t / double(n);
  auto alpha_of = [&](const Wavefunction& w) {
    const cplx q2 = 2.0 * w.branches()[0].quad.a00;
    return ph1.hbar / ph1.mass[0] * (q2.real() + q2.imag());
  };
  double phi = 1.0;
  Wavefunction at = psi;
  for (int k = 0; k < n; ++k) {
    const double a0 = alpha_of(at);
    Wavefunction mid = propagate(at, 0.5 * h);
    const double am = alpha_of(mid);
    at = propagate(mid, 0.5 * h);
    const double a1 = alpha_of(at);
    const double k1 = a0 * phi;
    const double k2 = am * (phi + 0.5 * h * k1);
    const double k3 = am * (phi + 0.5 * h * k2);
    const double k4 = a1 * (phi + h * k3);
    phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return phi;
}

}  // namespace

double pair_mode_correlator(double sigma2, double r, const Physical& ph, double t) {
  if (t < 0.0) throw Error("invalid-state: lag must be non-negative");
  if (!(sigma2 > 0.0) || !(std::abs(r) < 1.0))
    throw Error("invalid-state: need sigma2 > 0 and |r| < 1");
  if (ph.mass[0] != ph.mass[1] || ph.omega[0] != ph.omega[1])
    throw Error("invalid-state: pair modes require identical oscillators");
  Physical ph1 = ph;
  const double vp = sigma2 * (1.0 + r);
  const double vm = sigma2 * (1.0 - r);
  return 0.5 * (vp * mode_flow(vp, ph1, t) - vm * mode_flow(vm, ph1, t));
}

DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> y,
                        std::span<const double> se) {
  const std::size_t n = t.size();
  if (n < 2 || y.size() != n || se.size() != n)
    throw Error("invalid-state: need >= 2 matching (t, y, se) points");
  for (std::size_t i = 0; i < n; ++i)
    if (!(se[i] > 0.0)) throw Error("invalid-state: standard errors must be positive");

  double A = y[0];
  double gamma = 1.0;
  if (y[0] > 0.0 && y[n - 1] > 0.0 && t[n - 1] > t[0])
    gamma = std::log(y[0] / y[n - 1]) / (t[n - 1] - t[0]);

  auto chi2_of = [&](double a, double g) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = (y[i] - a * std::exp(-g * t[i])) / se[i];
      c += r * r;
    }
    return c;
  };

  double chi2 = chi2_of(A, gamma);
  for (int it = 0; it < 100; ++it) {
    // normal equations of the weighted Jacobian [e^{-gt}, -A t e^{-gt}] / se
    double j11 = 0, j12 = 0, j22 = 0, g1 = 0, g2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::exp(-gamma * t[i]);
      const double f1 = e / se[i];
      const double f2 = -A * t[i] * e / se[i];
      const double r = (y[i] - A * e) / se[i];
      j11 += f1 * f1;
      j12 += f1 * f2;
      j22 += f2 * f2;
      g1 += f1 * r;
      g2 += f2 * r;
    }
    const double det = j11 * j22 - j12 * j12;
    if (!(std::abs(det) > 0.0)) break;
    double dA = (j22 * g1 - j12 * g2) / det;
    double dg = (j11 * g2 - j12 * g1) / det;
    double step = 1.0;
    bool improved = false;
    for (int h = 0; h < 20; ++h) {
      const double c = chi2_of(A + step * dA, gamma + step * dg);
      if (c < chi2) {
        A += step * dA;
        gamma += step * dg;
        chi2 = c;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved || (std::abs(dA) < 1e-12 * std::max(1.0, std::abs(A)) &&
                      std::abs(dg) < 1e-12 * std::max(1.0, std::abs(gamma))))
      break;
  }
  return {gamma, A, std::sqrt(chi2 / double(n))};
}

}  // namespace nelson
