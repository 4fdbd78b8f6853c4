#include "nelsonlab/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nelsonlab/correlators.hpp"
#include "nelsonlab/equilibrium.hpp"
#include "nelsonlab/measurement.hpp"
#include "nelsonlab/presets.hpp"
#include "nelsonlab/rng.hpp"
#include "nelsonlab/runner.hpp"

namespace nelson {

namespace {

std::string fmt(double v, int prec = 4) {
  std::ostringstream ss;
  ss << std::setprecision(prec) << v;
  return ss.str();
}

struct Ctx {
  VerifyOptions opt;
  std::size_t n{};
  Physical ph1;  // unit 1D oscillator
  double sigma2{0.5};

  Ensemble ens_a;  // unmeasured oscillator, t_end = pi, estimator record set
  double ens_a_seconds{0.0};
  Ensemble ens_b;  // unmeasured oscillator, t_end = 5 (equilibrium KS)
};

SdeConfig sde_for(const Ctx& ctx, double t_end, std::uint64_t seed) {
  SdeConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = t_end;
  cfg.n_traj = ctx.n;
  cfg.seed = seed;
  cfg.threads = ctx.opt.threads;
  return cfg;
}

Ensemble run_unmeasured(const Ctx& ctx, double t_end, std::vector<double> recs,
                        std::uint64_t seed) {
  ExperimentSpec spec{make_ground_state(1.0, 1.0, 1.0), {}, {}};
  return run_experiment(spec, sde_for(ctx, t_end, seed), std::move(recs));
}

// ---- criterion 1: unmeasured decay + runtime -------------------------------

CriterionResult c1_unmeasured_decay(Ctx& ctx) {
  const auto start = std::chrono::steady_clock::now();
  ctx.ens_a = run_unmeasured(ctx, kPi, {0.0, 0.5, 1.0, 1.98, 2.0, 2.02, 2.35, 2.7, kPi}, 1);
  ctx.ens_a_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::ostringstream d;
  bool pass = true;
  double worst = 0.0;
  for (const double t : {0.0, 0.5, 1.0, 2.0}) {
    const Estimate e = mc_two_time(ctx.ens_a, 0.0, t);
    const double z = (e.value - sm_oscillator_correlator(ctx.sigma2, 1.0, t)) / e.stderr_;
    worst = std::max(worst, std::abs(z));
    if (std::abs(z) > 3.0) pass = false;
  }
  d << "max |z| vs 0.5 e^{-t} at t in {0,0.5,1,2}: " << fmt(worst) << " (<= 3); run took "
    << fmt(ctx.ens_a_seconds, 3) << " s";
  if (ctx.opt.full && ctx.ens_a_seconds > 90.0) {
    pass = false;
    d << " (> 90 s budget)";
  }
  return {1, "unmeasured-decay", pass, d.str()};
}

// ---- criterion 2: the no-collapse discrepancy at t = pi --------------------

CriterionResult c2_discrepancy(Ctx& ctx) {
  const Estimate e = mc_two_time(ctx.ens_a, 0.0, kPi);
  const double sm = ctx.sigma2 * std::exp(-kPi);
  const double z_sm = (e.value - sm) / e.stderr_;
  const double z_qm = (e.value - (-ctx.sigma2)) / e.stderr_;
  const bool pass = std::abs(z_sm) <= 3.0 && std::abs(z_qm) > 50.0;
  std::ostringstream d;
  d << "E[X(0)X(pi)] = " << fmt(e.value) << " +- " << fmt(e.stderr_, 2) << ", z vs 0.5e^{-pi} = "
    << fmt(z_sm, 3) << " (<= 3), z vs -0.5 = " << fmt(z_qm, 4) << " (> 50)";
  return {2, "collapse-free-discrepancy", pass, d.str()};
}

// ---- criterion 3: measured agreement at t = n pi ---------------------------

struct MeasuredRun {
  Estimate at_pi, at_2pi;
  double bias_flow;  // deterministic mean-flow bias of sigma2 * F at t ~ pi
};

MeasuredRun measured_run(const Ctx& ctx, double w, std::uint64_t seed) {
  ExperimentSpec spec{make_ground_state(1.0, 1.0, 1.0), {{0.0, {0}, w}}, {}};
  Ensemble ens = run_experiment(spec, sde_for(ctx, 2.0 * kPi, seed), {0.0, kPi, 2.0 * kPi});
  MeasuredRun r;
  r.at_pi = mc_two_time(ens, 0.0, kPi);
  r.at_2pi = mc_two_time(ens, 0.0, 2.0 * kPi);

  // Deterministic Euler mean flow of the conditional state (drift is affine,
  // so the ensemble mean follows m' = b(m) exactly): the w-dependent part of
  // the correlator bias, far below MC resolution.
  const double dt = 1e-3;
  const long n_steps = std::lround(kPi / dt);
  double x0v[1] = {1.0};
  Wavefunction psi = make_collapsed_state({x0v, 1}, w, Physical{{1, 1}, {1, 1}, 1.0});
  double m = 1.0;
  for (long k = 0; k < n_steps; ++k) {
    const double x[2] = {m, 0.0};
    m += dt * velocity_field(psi, x, VelocityKind::ForwardDrift).v[0];
    psi = propagate(psi, dt);
  }
  r.bias_flow = 0.5 * (m - (-1.0));
  return r;
}

CriterionResult c3_measured_agreement(Ctx& ctx) {
  const double sigma = std::sqrt(ctx.sigma2);
  const double w1 = 0.05 * sigma, w2 = 0.5 * w1;
  const MeasuredRun a = measured_run(ctx, w1, 11);
  const MeasuredRun b = measured_run(ctx, w2, 12);

  auto ok = [&](const Estimate& e, double target, double w) {
    return std::abs(e.value - target) <= 3.0 * e.stderr_ + 0.2 * (w / sigma);
  };
  bool pass = ok(a.at_pi, -0.5, w1) && ok(a.at_2pi, 0.5, w1) && ok(b.at_pi, -0.5, w2) &&
              ok(b.at_2pi, 0.5, w2);
  const bool shrink = std::abs(b.bias_flow) < std::abs(a.bias_flow);
  pass = pass && shrink;
  std::ostringstream d;
  d << "w=0.05s: X(0)X(pi) = " << fmt(a.at_pi.value) << " (target -0.5, tol "
    << fmt(3.0 * a.at_pi.stderr_ + 0.01, 2) << "), X(0)X(2pi) = " << fmt(a.at_2pi.value)
    << "; w/2 likewise " << fmt(b.at_pi.value) << ", " << fmt(b.at_2pi.value)
    << "; mean-flow bias " << fmt(a.bias_flow, 3) << " -> " << fmt(b.bias_flow, 3)
    << (shrink ? " (shrinks)" : " (does not shrink)");
  return {3, "measured-agreement", pass, d.str()};
}

// ---- criterion 4: collapsed drift converges to the analytic formula --------

CriterionResult c4_collapsed_drift(const Ctx& ctx) {
  const double X0 = 1.0;
  auto analytic = [&](double x, double t) {
    return x / std::tan(t) - X0 / std::sin(t);  // omega = 1
  };
  auto max_err = [&](double w, double t) {
    double x0v[1] = {X0};
    const Wavefunction psi = propagate(make_collapsed_state({x0v, 1}, w, ctx.ph1), t);
    double e = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double x[2] = {-1.5 + 4.0 * i / 19.0, 0.0};
      const double b = velocity_field(psi, x, VelocityKind::ForwardDrift).v[0];
      e = std::max(e, std::abs(b - analytic(x[0], t)));
    }
    return e;
  };

  const double w0 = 0.05 * std::sqrt(ctx.sigma2);
  bool pass = true;
  std::ostringstream d;
  d << "error ratios under w -> w/2:";
  for (const double t : {0.3, 1.0, 2.0}) {
    const double e0 = max_err(w0, t), e1 = max_err(w0 / 2.0, t), e2 = max_err(w0 / 4.0, t);
    const double r1 = e0 / e1, r2 = e1 / e2;
    d << " t=" << fmt(t, 2) << ": " << fmt(r1, 3) << ", " << fmt(r2, 3);
    if (r1 < 3.4 || r1 > 4.7 || r2 < 3.4 || r2 > 4.7) pass = false;
  }
  d << " (window [3.4, 4.7])";
  return {4, "collapsed-drift-formula", pass, d.str()};
}

// ---- criterion 5: quadrature oracle ----------------------------------------

CriterionResult c5_quadrature(const Ctx& ctx) {
  const std::size_t n_paths = ctx.opt.full ? 2000 : 500;
  const double dts[3] = {1e-2, 1e-3, 1e-4};
  double rms[3] = {};
  AnalyticDrift ou(1, [](const double* x, double, double* b) { b[0] = -x[0]; });
  for (int lvl = 0; lvl < 3; ++lvl) {
    SdeConfig cfg;
    cfg.dt = dts[lvl];
    cfg.t_end = 1.0;
    cfg.seed = 900 + std::uint64_t(lvl);
    const int n_steps = int(std::llround(1.0 / cfg.dt));
    const double sd = std::sqrt(cfg.dt);  // 2 nu dt with nu = 1/2
    double acc = 0.0;
    std::vector<double> dw(static_cast<std::size_t>(n_steps));
    for (std::size_t j = 0; j < n_paths; ++j) {
      const double x0[1] = {1.0};
      Trajectory tr = integrate(ou, ctx.ph1, x0, cfg, j);
      for (int k = 0; k < n_steps; ++k) {
        double z[2];
        rng::normal_pair(cfg.seed, std::uint32_t(j), std::uint32_t(k), rng::kWiener, z);
        dw[std::size_t(k)] = sd * z[0];
      }
      const double exact = quadrature_ou_path(1.0, dw, 1.0, cfg.dt);
      const double gap = tr.positions.back() - exact;
      acc += gap * gap;
    }
    rms[lvl] = std::sqrt(acc / double(n_paths));
  }
  // log-log slope over the three levels
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < 3; ++i) {
    const double lx = std::log(dts[i]), ly = std::log(rms[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
  const bool pass_slope = slope >= 0.35 && slope <= 0.65;

  // half-period mirror of the post-collapse path solution: exact +-X0
  std::vector<double> dw(7000);
  for (std::size_t k = 0; k < dw.size(); ++k) {
    double z[2];
    rng::normal_pair(5, 0, std::uint32_t(k), rng::kScatter, z);
    dw[k] = std::sqrt(1e-3) * z[0];
  }
  const QuadratureResult q1 = quadrature_collapsed_path(1.0, 1.0, dw, 1.0, 0.0, kPi, 1e-3);
  const QuadratureResult q2 = quadrature_collapsed_path(1.0, 1.0, dw, 1.0, 0.0, 2.0 * kPi, 1e-3);
  const bool pass_mirror = q1.value == -1.0 && q2.value == 1.0;

  std::ostringstream d;
  d << "EM-vs-quadrature RMS gaps " << fmt(rms[0], 3) << " / " << fmt(rms[1], 3) << " / "
    << fmt(rms[2], 3) << ", log-log slope " << fmt(slope, 3)
    << " outside the stated window [0.35, 0.65] - additive-noise Euler-Maruyama converges at "
       "strong order 1, so the dt^0.5 window cannot be met; half-period mirror values "
    << fmt(q1.value, 17) << ", " << fmt(q2.value, 17) << " (exact"
    << (q1.singular_window || q2.singular_window ? ", caustic windows flagged" : "") << ")";
  if (pass_slope)
    d << " [slope unexpectedly inside window]";
  return {5, "quadrature-oracle", pass_slope && pass_mirror, d.str()};
}

// ---- criterion 6: quantum equilibrium + structural identities --------------

CriterionResult c6_equilibrium(Ctx& ctx) {
  ctx.ens_b = run_unmeasured(ctx, 5.0, {0.0, 1.0, 2.0, 5.0}, 2);
  const double ks_bound = 4.0 / std::sqrt(double(ctx.n));
  bool pass = true;
  std::ostringstream d;
  d << "KS:";
  for (const double t : {0.0, 1.0, 2.0, 5.0}) {
    const Wavefunction psi_t = propagate(make_ground_state(1.0, 1.0, 1.0), t);
    const DensityDiagnostic diag = density_check(ctx.ens_b, psi_t, t);
    d << " t=" << fmt(t, 1) << ": " << fmt(diag.ks_statistic, 3);
    if (diag.ks_statistic >= ks_bound) pass = false;
    if (std::abs(diag.reference_mass - 1.0) > 1e-8) pass = false;
  }
  d << " (< " << fmt(ks_bound, 3) << ")";

  // kinematic identities at 100 scattered points, on a stationary and a
  // transient state
  double x0v[1] = {1.0};
  const Wavefunction states[2] = {make_ground_state(1.0, 1.0, 1.0),
                                  propagate(make_collapsed_state({x0v, 1}, 0.1, ctx.ph1), 0.7)};
  double worst_id = 0.0;
  for (int s = 0; s < 2; ++s) {
    for (int i = 0; i < 50; ++i) {
      double z[2];
      rng::normal_pair(20260814, std::uint32_t(i), std::uint32_t(s), rng::kScatter, z);
      const double x[2] = {2.0 * std::sqrt(ctx.sigma2) * z[0], 0.0};
      const FieldSample b = velocity_field(states[s], x, VelocityKind::ForwardDrift);
      const FieldSample bs = velocity_field(states[s], x, VelocityKind::BackwardDrift);
      const FieldSample v = velocity_field(states[s], x, VelocityKind::Current);
      const FieldSample u = velocity_field(states[s], x, VelocityKind::Osmotic);
      const auto glog = density_log_gradient(states[s], x);
      worst_id = std::max(worst_id, std::abs(b.v[0] - (v.v[0] + u.v[0])));
      worst_id = std::max(worst_id, std::abs(bs.v[0] - (v.v[0] - u.v[0])));
      worst_id = std::max(worst_id, std::abs(u.v[0] - 0.5 * glog[0]));  // hbar/2m = 1/2
    }
  }
  if (worst_id > 1e-12) pass = false;
  d << "; drift/osmotic identity residual " << fmt(worst_id, 2) << " (< 1e-12)";

  // forward + backward Kolmogorov residuals = 2 x continuity, on the grid
  const Wavefunction trans = propagate(make_collapsed_state({x0v, 1}, 0.1, ctx.ph1), 0.4);
  const double sig = std::sqrt(ctx.sigma2);
  double worst_fp = 0.0;
  int evaluated = 0;
  for (int i = 0; i < 401; ++i) {
    const double x[2] = {-5.0 * sig + 10.0 * sig * i / 400.0, 0.0};
    try {
      const double f = fokker_planck_residual(trans, x, 0.41, FpDirection::Forward);
      const double bck = fokker_planck_residual(trans, x, 0.41, FpDirection::Backward);
      const double cont = continuity_residual(trans, x, 0.41);
      worst_fp = std::max(worst_fp, std::abs(std::abs(f + bck) - 2.0 * cont));
      ++evaluated;
    } catch (const Error&) {
      // below the density floor; residuals are defined away from nodes
    }
  }
  if (worst_fp > 1e-10 || evaluated < 200) pass = false;
  d << "; |fwd+bwd - 2 continuity| " << fmt(worst_fp, 2) << " (< 1e-10, " << evaluated
    << "/401 grid points)";
  return {6, "quantum-equilibrium", pass, d.str()};
}

// ---- criterion 7: conditional mean-derivative estimators -------------------

struct SlopeFit {
  double slope{}, se{};
  int outliers{};
};

SlopeFit fit_bins(const std::vector<BinEstimate>& bins, double target_slope, double tol_se) {
  double num = 0.0, den = 0.0;
  for (const BinEstimate& b : bins) {
    const double w = 1.0 / (b.stderr_ * b.stderr_);
    num += w * b.x * b.value;
    den += w * b.x * b.x;
  }
  SlopeFit f;
  f.slope = num / den;
  f.se = 1.0 / std::sqrt(den);
  for (const BinEstimate& b : bins)
    if (std::abs(b.value - target_slope * b.x) > tol_se * b.stderr_) ++f.outliers;
  return f;
}

CriterionResult c7_estimators(const Ctx& ctx) {
  const double d1 = 0.02, d2 = 0.35;
  const double k1 = (1.0 - std::exp(-d1)) / d1;          // first-difference factor
  const double k2 = std::pow((1.0 - std::exp(-d2)) / d2, 2);  // iterated factor

  const auto fwd = estimate_mean_derivative(ctx.ens_a, 2.0, d1, DerivDirection::Forward, 1);
  const auto bwd = estimate_mean_derivative(ctx.ens_a, 2.0, d1, DerivDirection::Backward, 1);
  const auto itr = estimate_mean_derivative(ctx.ens_a, 2.0, d2, DerivDirection::Forward, 2);

  const SlopeFit fb = fit_bins(fwd, -k1, 4.0);
  const SlopeFit fbs = fit_bins(bwd, k1, 4.0);
  const SlopeFit fd = fit_bins(itr, k2, 4.0);

  bool pass = true;
  // finite-step conditional means are exactly -k1 x, +k1 x, k2 x; dividing by
  // the known factor tests b = -x, b* = +x, Db = x within sampling error
  if (std::abs(fb.slope / k1 + 1.0) > 3.5 * fb.se / k1) pass = false;
  if (std::abs(fbs.slope / k1 - 1.0) > 3.5 * fbs.se / k1) pass = false;
  if (std::abs(fd.slope / k2 - 1.0) > 3.5 * fd.se / k2) pass = false;
  if (fb.outliers > 2 || fbs.outliers > 2 || fd.outliers > 2) pass = false;

  std::ostringstream d;
  d << "b slope " << fmt(fb.slope / k1, 4) << " +- " << fmt(fb.se / k1, 2) << " (target -1), b* "
    << fmt(fbs.slope / k1, 4) << " +- " << fmt(fbs.se / k1, 2) << " (target +1), Db "
    << fmt(fd.slope / k2, 4) << " +- " << fmt(fd.se / k2, 2) << " (target +1; finite-step factors "
    << fmt(k1, 4) << ", " << fmt(k2, 4) << "); bin outliers " << fb.outliers << "/"
    << fbs.outliers << "/" << fd.outliers;
  return {7, "drift-estimators", pass, d.str()};
}

// ---- criterion 8: entangled pair -------------------------------------------

CriterionResult c8_nonlocality(const Ctx& ctx) {
  Physical ph2;  // two identical unit oscillators
  const double r = kPairCorrelation;
  const double c12 = r * ctx.sigma2;
  const double sigma = std::sqrt(ctx.sigma2);
  const double w = 0.05 * sigma;

  ExperimentSpec unmeas{make_pair_state(ctx.sigma2, r, ph2), {}, {}};
  Ensemble eu = run_experiment(unmeas, sde_for(ctx, 2.0 * kPi, 21), {0.0, kPi, 2.0 * kPi});

  ExperimentSpec meas{make_pair_state(ctx.sigma2, r, ph2), {{0.0, {0}, w}}, {}};
  Ensemble em = run_experiment(meas, sde_for(ctx, 2.0 * kPi, 22), {0.0, kPi, 2.0 * kPi});

  // decay fit of the unmeasured cross-correlator
  std::vector<double> ts, ys, ses;
  for (const double t : {0.0, kPi, 2.0 * kPi}) {
    const Estimate e = mc_two_time(eu, 0.0, t, 0, 1);
    ts.push_back(t);
    ys.push_back(e.value);
    ses.push_back(e.stderr_);
  }
  const DecayFit fit = fit_decay_rate(ts, ys, ses);
  const bool pass_decay = fit.rate > 0.8 && fit.rate < 1.2;

  // measured run tracks C12 cos(omega t) at commuting lags
  const Estimate mpi = mc_two_time(em, 0.0, kPi, 0, 1);
  const Estimate m2pi = mc_two_time(em, 0.0, 2.0 * kPi, 0, 1);
  const bool pass_meas = std::abs(mpi.value - (-c12)) <= 3.0 * mpi.stderr_ + 0.02 &&
                         std::abs(m2pi.value - c12) <= 3.0 * m2pi.stderr_ + 0.02;

  // measuring particle 1 changes particle 2's drift field immediately after
  const double dt0 = 1e-3;
  const Wavefunction pu = propagate(make_pair_state(ctx.sigma2, r, ph2), dt0);
  const int coords[1] = {0};
  const double outc[1] = {0.7};
  const Wavefunction pm =
      propagate(apply_position_measurement(make_pair_state(ctx.sigma2, r, ph2), {coords, 1},
                                           {outc, 1}, w),
                dt0);
  double diff = 0.0;
  for (const auto& pt : {std::pair{0.7, 0.7}, {0.7, 0.0}, {0.0, 0.7}, {0.5, -0.5}}) {
    const double x[2] = {pt.first, pt.second};
    const double bu = velocity_field(pu, x, VelocityKind::ForwardDrift).v[1];
    const double bm = velocity_field(pm, x, VelocityKind::ForwardDrift).v[1];
    diff = std::max(diff, std::abs(bu - bm));
  }
  const bool pass_drift = diff > 1e-2;  // 10 x the 1e-3 step scale

  std::ostringstream d;
  d << "unmeasured decay rate " << fmt(fit.rate, 4) << " (in [0.8, 1.2]); measured X1(0)X2(pi) = "
    << fmt(mpi.value) << " (target " << fmt(-c12) << "), X1(0)X2(2pi) = " << fmt(m2pi.value)
    << " (target " << fmt(c12) << "); coord-2 drift difference at t=0+ " << fmt(diff, 3)
    << " (> 0.01)";
  return {8, "pair-nonlocality", pass_decay && pass_meas && pass_drift, d.str()};
}

// ---- criterion 9: residual convergence -------------------------------------

CriterionResult c9_residuals(const Ctx& ctx) {
  const double sig = std::sqrt(ctx.sigma2);
  double x0v[1] = {1.0};
  const Wavefunction trans = propagate(make_collapsed_state({x0v, 1}, 0.1, ctx.ph1), 0.4);
  const Wavefunction ground = make_ground_state(1.0, 1.0, 1.0);

  auto l1 = [&](auto&& res) {
    double acc = 0.0;
    int cnt = 0;
    for (int i = 0; i < 401; ++i) {
      const double x[2] = {-5.0 * sig + 10.0 * sig * i / 400.0, 0.0};
      try {
        acc += std::abs(res(x));
        ++cnt;
      } catch (const Error&) {
      }
    }
    if (cnt < 200) throw Error("invalid-state: residual grid mostly below the density floor");
    return acc / double(cnt);
  };

  const double t_eval = 0.41;  // > state time + dt_res for both refinement levels
  const double hjm_h = l1([&](const double* x) { return hjm_residual(trans, x, t_eval, 1e-4); });
  const double hjm_h2 = l1([&](const double* x) { return hjm_residual(trans, x, t_eval, 5e-5); });
  const double con_h =
      l1([&](const double* x) { return continuity_residual(trans, x, t_eval, 1e-4); });
  const double con_h2 =
      l1([&](const double* x) { return continuity_residual(trans, x, t_eval, 5e-5); });
  const double r_hjm = hjm_h / hjm_h2;
  const double r_con = con_h / con_h2;
  const bool pass_conv = r_hjm > 3.4 && r_hjm < 4.7 && r_con > 3.4 && r_con < 4.7;

  double worst_ground = 0.0;
  for (const double xv : {-1.0, -0.3, 0.0, 0.4, 1.2}) {
    const double x[2] = {xv, 0.0};
    worst_ground = std::max(worst_ground, hjm_residual(ground, x, 0.5));
    worst_ground = std::max(worst_ground, continuity_residual(ground, x, 0.5));
    worst_ground =
        std::max(worst_ground, std::abs(fokker_planck_residual(ground, x, 0.5, FpDirection::Forward)));
  }
  const bool pass_ground = worst_ground < 1e-8;

  std::ostringstream d;
  d << "refinement ratios dt_res -> dt_res/2: phase-equation " << fmt(r_hjm, 3) << ", continuity "
    << fmt(r_con, 3) << " (window [3.4, 4.7]); ground-state residuals < " << fmt(worst_ground, 2)
    << " (< 1e-8)";
  return {9, "residual-convergence", pass_conv && pass_ground, d.str()};
}

// ---- criterion 10: byte-identical reproducibility --------------------------

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("io: cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

CriterionResult c10_reproducibility(const Ctx& ctx) {
  if (ctx.opt.bin_path.empty())
    return {10, "reproducibility", false, "no CLI binary supplied (set NELSON_LAB_BIN)"};
  namespace fs = std::filesystem;
  const fs::path dir =
      ctx.opt.scratch_dir.empty() ? fs::temp_directory_path() : fs::path(ctx.opt.scratch_dir);
  fs::create_directories(dir);

  auto run_once = [&](const std::string& name, int threads, std::uint64_t seed) {
    const fs::path out = dir / name;
    std::ostringstream cmd;
    cmd << '"' << ctx.opt.bin_path << '"'
        << " run oscillator-measured-at-0 --n-traj 2000 --dt 1e-3 --t-end 1.5 --lags 0,0.5,1"
        << " --seed " << seed << " --threads " << threads << " --no-timestamp --verbosity 0"
        << " --out " << out << " > /dev/null 2>&1";
    const int rc = std::system(cmd.str().c_str());
    if (rc != 0) throw Error("io: CLI run failed with status " + std::to_string(rc));
    return slurp(out.string());
  };

  const std::string a = run_once("repro_a.csv", 1, 7);
  const std::string b = run_once("repro_b.csv", 4, 7);
  const std::string c = run_once("repro_c.csv", 1, 7);
  const std::string other = run_once("repro_d.csv", 1, 8);
  for (const char* name : {"repro_a.csv", "repro_b.csv", "repro_c.csv", "repro_d.csv"}) {
    std::error_code ec;
    fs::remove(dir / name, ec);
  }
  std::error_code dir_ec;
  fs::remove(dir, dir_ec);  // drops the scratch dir when it ends up empty
  const bool pass = !a.empty() && a == b && a == c && a != other;
  std::ostringstream d;
  d << "CSV bytes: rerun " << (a == c ? "identical" : "DIFFER") << ", threads 1 vs 4 "
    << (a == b ? "identical" : "DIFFER") << ", different seed "
    << (a != other ? "differs (as it should)" : "IDENTICAL (suspicious)") << " ("
    << a.size() << " bytes)";
  return {10, "reproducibility", pass, d.str()};
}

}  // namespace

std::vector<CriterionResult> run_verification(const VerifyOptions& opt, std::ostream& log) {
  Ctx ctx;
  ctx.opt = opt;
  ctx.n = opt.full ? 100000 : 20000;
  ctx.ph1.omega = {1.0, 1.0};

  log << "running " << (opt.full ? "full" : "quick") << " verification (n_traj = " << ctx.n
      << ")\n";

  std::vector<CriterionResult> results;
  auto add = [&](CriterionResult r) {
    log << (r.pass ? "[PASS] " : "[FAIL] ") << r.index << " " << r.name << ": " << r.detail
        << "\n";
    log.flush();
    results.push_back(std::move(r));
  };

  add(c1_unmeasured_decay(ctx));
  add(c2_discrepancy(ctx));
  add(c3_measured_agreement(ctx));
  add(c4_collapsed_drift(ctx));
  add(c5_quadrature(ctx));
  add(c6_equilibrium(ctx));
  add(c7_estimators(ctx));
  add(c8_nonlocality(ctx));
  add(c9_residuals(ctx));
  add(c10_reproducibility(ctx));

  int failed = 0;
  for (const CriterionResult& r : results)
    if (!r.pass) ++failed;
  log << (failed == 0 ? "all criteria passed\n"
                      : std::to_string(failed) + " criterion(s) failed\n");
  return results;
}

int verification_exit_code(const std::vector<CriterionResult>& results) {
  for (const CriterionResult& r : results)
    if (!r.pass) return 1;
  return 0;
}

}  // namespace nelson
