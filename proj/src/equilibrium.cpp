#include "nelsonlab/equilibrium.hpp"

#include <algorithm>
#include <cmath>

namespace nelson {

namespace {

struct TimeSlice {
  Wavefunction center, plus, minus;
};

TimeSlice centered_slices(const Wavefunction& psi, double t, double dt_res) {
  if (!(dt_res > 0.0)) throw Error("invalid-state: dt_res must be positive");
  if (t < psi.time() - 1e-12) throw Error("invalid-state: t precedes the state's time");
  const double tc = std::max(t, psi.time() + dt_res);
  Wavefunction minus = propagate(psi, tc - dt_res - psi.time());
  Wavefunction center = propagate(minus, dt_res);
  Wavefunction plus = propagate(center, dt_res);
  return {std::move(center), std::move(plus), std::move(minus)};
}

double density_at(const Wavefunction& psi, const double* x) {
  return std::exp(2.0 * log_evaluate(psi, x).real());
}

}  // namespace

double continuity_residual(const Wavefunction& psi, const double* x, double t, double dt_res) {
  const TimeSlice s = centered_slices(psi, t, dt_res);
  const LogDerivs ld = log_derivatives(s.center, x);
  if (ld.near_node) throw Error("near-node: residual undefined below the density floor");
  const Physical& ph = s.center.physical();
  const int d = s.center.dim();

  const double rho = std::exp(ld.log_density);
  const double drho_dt = (density_at(s.plus, x) - density_at(s.minus, x)) / (2.0 * dt_res);
  double div_v_rho = 0.0;
  for (int i = 0; i < d; ++i) {
    const double hm = ph.hbar / ph.mass[std::size_t(i)];
    const double vi = hm * ld.grad[std::size_t(i)].imag();
    const double dvi = hm * ld.hess(i, i).imag();
    const double glog = 2.0 * ld.grad[std::size_t(i)].real();
    div_v_rho += rho * (dvi + vi * glog);
  }
  return std::abs(drho_dt + div_v_rho);
}

double fokker_planck_residual(const Wavefunction& psi, const double* x, double t,
                              FpDirection dir, double dt_res) {
  const TimeSlice s = centered_slices(psi, t, dt_res);
  const LogDerivs ld = log_derivatives(s.center, x);
  if (ld.near_node) throw Error("near-node: residual undefined below the density floor");
  const Physical& ph = s.center.physical();
  const int d = s.center.dim();
  const bool fwd = dir == FpDirection::Forward;

  const double rho = std::exp(ld.log_density);
  const double drho_dt = (density_at(s.plus, x) - density_at(s.minus, x)) / (2.0 * dt_res);
  double acc = drho_dt;
  for (int i = 0; i < d; ++i) {
    const double hm = ph.hbar / ph.mass[std::size_t(i)];
    const double re = ld.grad[std::size_t(i)].real(), im = ld.grad[std::size_t(i)].imag();
    const double hre = ld.hess(i, i).real(), him = ld.hess(i, i).imag();
    const double bi = fwd ? hm * (re + im) : hm * (im - re);
    const double dbi = fwd ? hm * (hre + him) : hm * (him - hre);
    const double glog = 2.0 * re;
    acc += rho * (dbi + bi * glog);
    // nu_i d^2 rho / dx_i^2 = nu_i rho (2 Re hess_ii + (d log rho / dx_i)^2)
    const double lap_i = rho * (2.0 * hre + glog * glog);
    acc += (fwd ? -1.0 : 1.0) * diffusion_coeff(ph, i) * lap_i;
  }
  return acc;
}

DensityDiagnostic density_check(const Ensemble& ens, const Wavefunction& psi_t, double t,
                                int coord) {
  if (coord < 0 || coord >= ens.dim) throw Error("invalid-state: coordinate out of range");
  if (std::abs(psi_t.time() - t) > 1e-9)
    throw Error("invalid-state: reference state is not at the requested time");

  const ExpSum1D marg = marginal_density(psi_t, coord);

  // Grid wide enough to hold every branch's mass: union of the per-term
  // center +- 10 sd windows.
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& term : marg.terms) {
    const double ar = term.a.real();
    if (!(ar < 0.0)) continue;
    const double c = -term.b.real() / (2.0 * ar);
    const double sd = std::sqrt(-0.5 / ar);
    if (first || c - 10.0 * sd < lo) lo = c - 10.0 * sd;
    if (first || c + 10.0 * sd > hi) hi = c + 10.0 * sd;
    first = false;
  }
  if (first) throw Error("invalid-state: marginal has no normalizable term");

  constexpr int kGrid = 20001;
  const double h = (hi - lo) / double(kGrid - 1);
  std::vector<double> cdf(kGrid);
  double prev = std::max(0.0, marg(lo));
  cdf[0] = 0.0;
  for (int i = 1; i < kGrid; ++i) {
    const double cur = std::max(0.0, marg(lo + i * h));
    cdf[std::size_t(i)] = cdf[std::size_t(i) - 1] + 0.5 * h * (prev + cur);
    prev = cur;
  }
  const double mass = cdf.back();

  auto ref_cdf = [&](double x) {
    if (x <= lo) return 0.0;
    if (x >= hi) return mass;
    const double u = (x - lo) / h;
    const int i = std::min(kGrid - 2, int(u));
    return cdf[std::size_t(i)] + (u - i) * (cdf[std::size_t(i) + 1] - cdf[std::size_t(i)]);
  };

  const auto sl = ens.slice(ens.record_index(t), coord);
  std::vector<double> xs(sl.begin(), sl.end());
  std::sort(xs.begin(), xs.end());
  const double n = double(xs.size());

  double ks = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = std::min(1.0, ref_cdf(xs[i]));
    ks = std::max(ks, std::max(double(i + 1) / n - F, F - double(i) / n));
  }

  DensityDiagnostic diag;
  diag.time = t;
  diag.ks_statistic = ks;
  diag.reference_mass = mass;
  constexpr int kBins = 50;
  const double bw = (hi - lo) / kBins;
  diag.histogram.resize(kBins);
  for (int b = 0; b < kBins; ++b) {
    auto& bin = diag.histogram[std::size_t(b)];
    bin.lo = lo + b * bw;
    bin.hi = lo + (b + 1) * bw;
    const auto it0 = std::lower_bound(xs.begin(), xs.end(), bin.lo);
    const auto it1 = std::lower_bound(xs.begin(), xs.end(), bin.hi);
    bin.count = std::size_t(it1 - it0);
    bin.ref_mass = ref_cdf(bin.hi) - ref_cdf(bin.lo);
  }
  return diag;
}

}  // namespace nelson
