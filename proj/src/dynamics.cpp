#include "nelsonlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nelsonlab/rng.hpp"

namespace nelson {

namespace {

int resolve_steps(const SdeConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw Error("invalid-state: dt must be positive");
  if (!(cfg.t_end > cfg.t0)) throw Error("invalid-state: t_end must exceed t0");
  const double n = (cfg.t_end - cfg.t0) / cfg.dt;
  const int steps = int(std::llround(n));
  if (steps < 1 || std::abs(n - double(steps)) > 1e-6)
    throw Error("off-grid: t_end - t0 must be an integer number of steps");
  return steps;
}

// Clamp |b| to b_max (direction preserved); non-finite drift is zeroed.
// Returns true when the step was interfered with.
inline bool clamp_drift(double* b, int d, double b_max) {
  double n2 = 0.0;
  for (int i = 0; i < d; ++i) n2 += b[i] * b[i];
  if (!std::isfinite(n2)) {
    for (int i = 0; i < d; ++i) b[i] = 0.0;
    return true;
  }
  if (n2 > b_max * b_max) {
    const double s = b_max / std::sqrt(n2);
    for (int i = 0; i < d; ++i) b[i] *= s;
    return true;
  }
  return false;
}

}  // namespace

WavefunctionSchedule::WavefunctionSchedule(const Wavefunction& psi0, double dt, int n_steps,
                                           VelocityKind kind)
    : kind_(kind) {
  if (n_steps < 0) throw Error("invalid-state: negative step count");
  states_.reserve(std::size_t(n_steps) + 1);
  states_.push_back(psi0);
  for (int k = 0; k < n_steps; ++k) states_.push_back(propagate(states_.back(), dt));
}

FieldSample WavefunctionSchedule::drift(const double* x, int step, double) const {
  return velocity_field(states_[std::size_t(step)], x, kind_);
}

Trajectory integrate(const DriftSource& drift, const Physical& ph, const double* x0,
                     const SdeConfig& cfg, std::uint64_t traj_id) {
  const int d = drift.dim();
  const int steps = resolve_steps(cfg);
  Trajectory tr;
  tr.dim = d;
  tr.traj_id = traj_id;
  tr.times.resize(std::size_t(steps) + 1);
  tr.positions.resize((std::size_t(steps) + 1) * std::size_t(d));

  double sig[2];
  for (int i = 0; i < d; ++i) sig[i] = std::sqrt(2.0 * diffusion_coeff(ph, i) * cfg.dt);

  double x[2] = {x0[0], d == 2 ? x0[1] : 0.0};
  tr.times[0] = cfg.t0;
  for (int i = 0; i < d; ++i) tr.positions[std::size_t(i)] = x[i];

  for (int k = 0; k < steps; ++k) {
    const double t = cfg.t0 + k * cfg.dt;
    FieldSample f = drift.drift(x, k, t);
    bool touched = clamp_drift(f.v.data(), d, cfg.b_max);
    if (f.near_node || touched) ++tr.clamp_events;
    double z[2];
    rng::normal_pair(cfg.seed, std::uint32_t(traj_id), std::uint32_t(k), rng::kWiener, z);
    for (int i = 0; i < d; ++i) x[i] += f.v[i] * cfg.dt + sig[i] * z[i];
    tr.times[std::size_t(k) + 1] = cfg.t0 + (k + 1) * cfg.dt;
    for (int i = 0; i < d; ++i) tr.positions[(std::size_t(k) + 1) * std::size_t(d) + i] = x[i];
  }
  return tr;
}

std::vector<double> sample_initial(const Wavefunction& psi, std::size_t n, std::uint64_t seed) {
  const int d = psi.dim();
  const auto& br = psi.branches();
  std::vector<double> out(n * std::size_t(d));

  // Per-branch sampling parameters: rho_j has precision -4 Re(quad), mean from lin.
  struct BranchSampler {
    double mean[2];
    double chol[3];  // L00, L10, L11 of the covariance
    double log_mass;
  };
  std::vector<BranchSampler> bs(br.size());
  for (std::size_t j = 0; j < br.size(); ++j) {
    const GaussianBranch& g = br[j];
    const double p00 = -4.0 * g.quad.a00.real();
    const double p01 = -4.0 * g.quad.a01.real();
    const double p11 = -4.0 * g.quad.a11.real();
    const double r0 = 2.0 * g.lin[0].real(), r1 = 2.0 * g.lin[1].real();
    BranchSampler& s = bs[j];
    if (d == 1) {
      const double c00 = 1.0 / p00;
      s.mean[0] = c00 * r0;
      s.mean[1] = 0.0;
      s.chol[0] = std::sqrt(c00);
      s.chol[1] = s.chol[2] = 0.0;
      // mass = int rho_j: log m = 2 Re amp + d/2 log pi - 1/2 log det(p) + mean.r/2... use
      // log m = 2 Re amp + (1/2) log(2 pi det C) ... directly below via the Gaussian integral
      s.log_mass = 2.0 * g.log_amp.real() + 0.5 * std::log(2.0 * kPi * c00) +
                   0.5 * s.mean[0] * r0;
    } else {
      const double dd = p00 * p11 - p01 * p01;
      const double c00 = p11 / dd, c01 = -p01 / dd, c11 = p00 / dd;
      s.mean[0] = c00 * r0 + c01 * r1;
      s.mean[1] = c01 * r0 + c11 * r1;
      s.chol[0] = std::sqrt(c00);
      s.chol[1] = c01 / s.chol[0];
      s.chol[2] = std::sqrt(c11 - s.chol[1] * s.chol[1]);
      s.log_mass = 2.0 * g.log_amp.real() + 0.5 * std::log(4.0 * kPi * kPi * (c00 * c11 - c01 * c01)) +
                   0.5 * (s.mean[0] * r0 + s.mean[1] * r1);
    }
  }

  if (br.size() == 1) {
    const BranchSampler& s = bs[0];
    for (std::size_t j = 0; j < n; ++j) {
      double z[2];
      rng::normal_pair(seed, std::uint32_t(j), 0u, rng::kInitGauss, z);
      out[j * std::size_t(d)] = s.mean[0] + s.chol[0] * z[0];
      if (d == 2) out[j * std::size_t(d) + 1] = s.mean[1] + s.chol[1] * z[0] + s.chol[2] * z[1];
    }
    return out;
  }

  // Mixture proposal + rejection against the envelope n_br * sum_j |psi_j|^2.
  double lmax = bs[0].log_mass;
  for (const auto& s : bs) lmax = std::max(lmax, s.log_mass);
  std::vector<double> cum(bs.size());
  double total = 0.0;
  for (std::size_t j = 0; j < bs.size(); ++j) {
    total += std::exp(bs[j].log_mass - lmax);
    cum[j] = total;
  }
  const double nbr = double(br.size());

  for (std::size_t j = 0; j < n; ++j) {
    bool accepted = false;
    for (std::uint32_t attempt = 0; attempt < 10000; ++attempt) {
      double u[2], z[2], x[2] = {0.0, 0.0};
      rng::uniform_pair(seed, std::uint32_t(j), attempt, rng::kInitUniform, u);
      rng::normal_pair(seed, std::uint32_t(j), attempt, rng::kInitGauss, z);
      const double pick = u[0] * total;
      std::size_t bi = 0;
      while (bi + 1 < bs.size() && cum[bi] < pick) ++bi;
      const BranchSampler& s = bs[bi];
      x[0] = s.mean[0] + s.chol[0] * z[0];
      if (d == 2) x[1] = s.mean[1] + s.chol[1] * z[0] + s.chol[2] * z[1];
      // accept with rho(x) / (n_br sum_j rho_j(x))
      const cplx lpsi = log_evaluate(psi, x);
      double env = 0.0;
      for (std::size_t b = 0; b < br.size(); ++b) {
        cplx L = quad_form(br[b].quad, x, d) + br[b].lin[0] * x[0] +
                 (d == 2 ? br[b].lin[1] * x[1] : 0.0) + br[b].log_amp;
        env += std::exp(2.0 * (L.real() - lpsi.real()));
      }
      const double p_acc = 1.0 / (nbr * env);  // = rho / (n_br sum rho_j)
      if (u[1] <= p_acc) {
        out[j * std::size_t(d)] = x[0];
        if (d == 2) out[j * std::size_t(d) + 1] = x[1];
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw Error("sampling: envelope acceptance rate below 1e-3 (configuration error)");
  }
  return out;
}

double quadrature_ou_path(double x0, std::span<const double> dw, double omega, double dt) {
  if (!(dt > 0.0)) throw Error("invalid-state: dt must be positive");
  const double decay = std::exp(-omega * dt);
  double x = x0;
  for (const double w : dw) x = decay * (x + w);
  return x;
}

QuadratureResult quadrature_collapsed_path(double X0, double xs, std::span<const double> dw,
                                           double omega, double s, double t, double dt) {
  if (!(dt > 0.0)) throw Error("invalid-state: dt must be positive");
  if (!(omega > 0.0)) throw Error("invalid-state: collapsed quadrature needs omega > 0");
  if (!(t > s)) throw Error("invalid-state: target time must exceed the collapse time");
  if (std::abs(xs - X0) > 1e-9 * std::max(1.0, std::abs(X0)))
    throw Error("invalid-state: delta-limit path starts at the collapse center (xs = X0)");

  const double tau_total = t - s;
  // Either an integer number of dt steps, or a half-period target where the
  // final noise weight vanishes identically.
  const double theta_total = omega * tau_total;
  const long half_periods = std::lround(theta_total / kPi);
  const bool half_period_target = std::abs(theta_total - double(half_periods) * kPi) < 1e-9;

  long n_full = std::lround(tau_total / dt);
  bool grid_target = std::abs(tau_total - double(n_full) * dt) < 1e-9;
  if (!grid_target) {
    if (!half_period_target)
      throw Error("off-grid: target must sit on the dt grid or on a half period");
    n_full = long(std::floor(tau_total / dt + 1e-12));
  }
  if (std::size_t(n_full) > dw.size())
    throw Error("invalid-state: noise path shorter than the requested horizon");

  QuadratureResult res;
  double x = X0;
  double sin_prev = 0.0;  // sin(omega tau_k) for the previous grid time
  for (long k = 0; k < n_full; ++k) {
    const double tau1 = double(k + 1) * dt;
    const double s1 = std::sin(omega * tau1), c1 = std::cos(omega * tau1);
    if (k == 0) {
      // exact flow from the collapse instant; the first increment enters with
      // weight sin(omega tau1)/sin(omega tau1) = 1
      x = X0 * c1 + dw[0];
    } else {
      // flag windows within one step of a caustic (omega tau at a nonzero
      // multiple of pi), where the left-endpoint weight 1/sin blows up
      const double theta0 = omega * double(k) * dt;
      const double wraps = std::round(theta0 / kPi);
      if (wraps >= 1.0 && std::abs(theta0 - wraps * kPi) < omega * dt)
        res.singular_window = true;
      const double r = s1 / sin_prev;
      const double c0 = std::cos(theta0);
      x = r * x + X0 * (c1 - r * c0) + r * dw[std::size_t(k)];
    }
    sin_prev = s1;
  }

  if (grid_target && !half_period_target) {
    res.value = x;
    return res;
  }
  // Exact evaluation at tau_total = n pi / omega: sin(n pi) = 0 kills both the
  // flow of the accumulated noise and the final increment; only the mirrored
  // center survives.
  res.value = (half_periods % 2 == 0) ? X0 : -X0;
  return res;
}

std::size_t Ensemble::record_index(double t) const {
  for (std::size_t r = 0; r < record_times.size(); ++r)
    if (std::abs(record_times[r] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return r;
  throw Error("off-grid: time " + std::to_string(t) + " is not a record time");
}

std::vector<BinEstimate> estimate_mean_derivative(const Ensemble& ens, double t, double dt_est,
                                                  DerivDirection dir, int order, int coord,
                                                  int n_bins) {
  if (!(dt_est > 0.0)) throw Error("invalid-state: estimator step must be positive");
  if (order != 1 && order != 2) throw Error("invalid-state: estimator order must be 1 or 2");
  if (order == 2 && dir == DerivDirection::Backward)
    throw Error("invalid-state: the iterated estimator is forward-only");
  if (n_bins < 1) throw Error("invalid-state: need at least one bin");
  if (coord < 0 || coord >= ens.dim) throw Error("invalid-state: coordinate out of range");

  const std::span<const double> base = ens.slice(ens.record_index(t), coord);
  std::span<const double> a, b;
  double scale = 0.0;
  if (order == 1) {
    scale = 1.0 / dt_est;
    if (dir == DerivDirection::Forward)
      a = ens.slice(ens.record_index(t + dt_est), coord);
    else
      a = ens.slice(ens.record_index(t - dt_est), coord);
  } else {
    scale = 1.0 / (dt_est * dt_est);
    a = ens.slice(ens.record_index(t + dt_est), coord);
    b = ens.slice(ens.record_index(t + 2.0 * dt_est), coord);
  }

  const std::size_t n = ens.n_traj;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t i, std::size_t j) { return base[i] < base[j]; });

  std::vector<BinEstimate> bins;
  bins.reserve(std::size_t(n_bins));
  for (int bi = 0; bi < n_bins; ++bi) {
    const std::size_t lo = n * std::size_t(bi) / std::size_t(n_bins);
    const std::size_t hi = n * std::size_t(bi + 1) / std::size_t(n_bins);
    if (hi <= lo) continue;
    double sx = 0.0, sv = 0.0, sv2 = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t j = idx[k];
      double v;
      if (order == 1)
        v = (dir == DerivDirection::Forward) ? (a[j] - base[j]) * scale
                                             : (base[j] - a[j]) * scale;
      else
        v = (b[j] - 2.0 * a[j] + base[j]) * scale;
      sx += base[j];
      sv += v;
      sv2 += v * v;
    }
    const double cnt = double(hi - lo);
    BinEstimate be;
    be.count = hi - lo;
    be.x = sx / cnt;
    be.value = sv / cnt;
    const double var = std::max(0.0, sv2 / cnt - be.value * be.value);
    be.stderr_ = std::sqrt(var / cnt);
    bins.push_back(be);
  }
  return bins;
}

}  // namespace nelson
