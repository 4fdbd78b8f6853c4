#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <thread>

#include "nelsonlab/measurement.hpp"
#include "nelsonlab/rng.hpp"

namespace nelson {

namespace {

// Branch parameters with linear coefficient affine in the recorded outcomes:
// lin(t) = lin0(t) + sum_s cols[s](t) * outcome_s. Closed under propagation
// (lin maps linearly through each step) and under measurements (full
// measurements reset the state with fresh outcome columns, partial ones add
// a Gaussian factor whose center is the new outcome).
struct SymbolicState {
  CSym quad;
  std::array<cplx, 2> lin0{};
  std::vector<std::array<cplx, 2>> cols;

  void advance(const detail::StepKernel& k, int d) {
    GaussianBranch g;
    g.quad = quad;
    g.lin = lin0;
    CSym S;
    GaussianBranch gn = detail::advance_branch(g, k, &S);
    quad = gn.quad;
    lin0 = gn.lin;
    for (auto& col : cols) {
      cplx sc[2];
      mat_vec(S, col.data(), sc, d);
      for (int i = 0; i < d; ++i) col[std::size_t(i)] = -0.5 * k.beta[std::size_t(i)] * sc[i];
    }
  }
};

// Real per-step drift table: b_i(x) = sum_j A[i][j] x_j + c[i] + sum_s G[s][i] outcome_s.
struct AffineStep {
  double A[2][2]{};
  double c[2]{};
  std::vector<std::array<double, 2>> G;
};

inline double reim(cplx z) { return z.real() + z.imag(); }

AffineStep to_table(const SymbolicState& st, const Physical& ph, int d) {
  AffineStep a;
  for (int i = 0; i < d; ++i) {
    const double s = ph.hbar / ph.mass[std::size_t(i)];
    for (int j = 0; j < d; ++j) a.A[i][j] = s * reim(2.0 * st.quad(i, j));
    a.c[i] = s * reim(st.lin0[std::size_t(i)]);
  }
  a.G.resize(st.cols.size());
  for (std::size_t sidx = 0; sidx < st.cols.size(); ++sidx)
    for (int i = 0; i < d; ++i)
      a.G[sidx][std::size_t(i)] = (ph.hbar / ph.mass[std::size_t(i)]) * reim(st.cols[sidx][std::size_t(i)]);
  return a;
}

struct MeasStop {
  int step;
  std::size_t plan_index;  // into spec.measurements
  std::size_t slot_base;   // first outcome slot
};

// Static per-run plan shared by all trajectories.
struct Plan {
  int dim{1};
  int n_steps{0};
  Physical ph;
  double dt{};
  double t0{};

  std::vector<int> rec_of_step;  // n_steps + 1 entries, -1 or record index
  std::vector<MeasStop> stops;   // ascending by step
  std::size_t n_slots{0};

  int sel_step{-1};
  double sel_eps{1e-8};

  // Steps [0, affine_begin) evaluate drift pointwise on shared full-psi
  // snapshots (superposition region); steps >= affine_begin use main affine
  // tables. Resolved double-slit trajectories use their branch table from
  // sel_step until affine_begin.
  int affine_begin{0};
  std::vector<Wavefunction> shared;                    // steps [0, affine_begin)
  std::vector<AffineStep> main_tables;                 // steps [affine_begin, n_steps)
  std::array<std::vector<AffineStep>, 2> branch_tables;  // steps [sel_step, affine_begin)

  double noise_sd[2]{};
  double b_max{1e5};
  std::uint64_t seed{1};
};

int snap_step(double t, double t0, double dt, int n_steps, const char* what) {
  const double u = (t - t0) / dt;
  const int k = int(std::llround(u));
  if (k < 0 || k > n_steps)
    throw Error(std::string("off-grid: ") + what + " time " + std::to_string(t) +
                " outside the integration window");
  return k;
}

// Evolve a symbolic state through steps [from, to), appending tables.
void emit_tables(SymbolicState& st, const detail::StepKernel& kern, const Physical& ph, int d,
                 int from, int to, std::vector<AffineStep>& out) {
  for (int k = from; k < to; ++k) {
    out.push_back(to_table(st, ph, d));
    st.advance(kern, d);
  }
}

Plan build_plan(const ExperimentSpec& spec, const SdeConfig& cfg,
                const std::vector<double>& record_times) {
  const Wavefunction& psi0 = spec.psi0;
  Plan p;
  p.dim = psi0.dim();
  p.ph = psi0.physical();
  p.dt = cfg.dt;
  p.t0 = cfg.t0;
  p.b_max = cfg.b_max;
  p.seed = cfg.seed;
  if (!(cfg.dt > 0.0)) throw Error("invalid-state: dt must be positive");
  if (!(cfg.t_end > cfg.t0)) throw Error("invalid-state: t_end must exceed t0");
  if (std::abs(psi0.time() - cfg.t0) > 1e-12)
    throw Error("invalid-state: initial state time must equal t0");
  p.n_steps = int(std::llround((cfg.t_end - cfg.t0) / cfg.dt));
  if (p.n_steps < 1) throw Error("invalid-state: window shorter than one step");

  double omega_max = 0.0;
  for (int i = 0; i < p.dim; ++i) {
    omega_max = std::max(omega_max, p.ph.omega[std::size_t(i)]);
    p.noise_sd[i] = std::sqrt(2.0 * diffusion_coeff(p.ph, i) * cfg.dt);
  }
  if (omega_max > 0.0 && cfg.dt * omega_max > kPi / 4.0)
    throw Error("invalid-state: dt exceeds a quarter period of the stiffest coordinate");

  p.rec_of_step.assign(std::size_t(p.n_steps) + 1, -1);
  for (std::size_t r = 0; r < record_times.size(); ++r) {
    const int k = snap_step(record_times[r], cfg.t0, cfg.dt, p.n_steps, "record");
    if (p.rec_of_step[std::size_t(k)] != -1) throw Error("invalid-state: duplicate record time");
    p.rec_of_step[std::size_t(k)] = int(r);
  }

  int prev = -1;
  for (std::size_t m = 0; m < spec.measurements.size(); ++m) {
    const PlannedMeasurement& pm = spec.measurements[m];
    if (pm.coords.empty() || !(pm.width > 0.0))
      throw Error("invalid-state: measurement needs coordinates and a positive width");
    const int k = snap_step(pm.t, cfg.t0, cfg.dt, p.n_steps, "measurement");
    if (k <= prev && !(prev == -1))
      throw Error("invalid-state: measurement times must be strictly increasing");
    prev = k;
    p.stops.push_back({k, m, p.n_slots});
    p.n_slots += pm.coords.size();
  }

  const bool multi = psi0.branches().size() > 1;
  if (spec.selection.t >= 0.0) {
    p.sel_step = snap_step(spec.selection.t, cfg.t0, cfg.dt, p.n_steps, "selection");
    p.sel_eps = spec.selection.eps;
  }

  const detail::StepKernel kern = detail::step_kernel(p.ph, p.dim, cfg.dt);

  // Full measurement replaces the state by the collapse Gaussian of the new
  // outcome; a partial one adds the Gaussian factor on the measured
  // coordinates. Either way the symbolic form stays affine in the outcomes.
  auto apply_stop = [&](SymbolicState& st, const MeasStop& ms) {
    const PlannedMeasurement& pm = spec.measurements[ms.plan_index];
    const double w2 = pm.width * pm.width;
    if (int(pm.coords.size()) == p.dim) {
      st.quad = {};
      st.lin0 = {};
      for (auto& col : st.cols) col = {};
    }
    for (std::size_t c = 0; c < pm.coords.size(); ++c) {
      const int ci = pm.coords[c];
      if (ci == 0)
        st.quad.a00 += -1.0 / (4.0 * w2);
      else
        st.quad.a11 += -1.0 / (4.0 * w2);
      st.cols[ms.slot_base + c][std::size_t(ci)] += 1.0 / (2.0 * w2);
    }
  };

  if (!multi) {
    p.affine_begin = 0;
    SymbolicState st;
    st.quad = psi0.branches()[0].quad;
    st.lin0 = psi0.branches()[0].lin;
    st.cols.assign(p.n_slots, {});
    int k = 0;
    for (const MeasStop& ms : p.stops) {
      emit_tables(st, kern, p.ph, p.dim, k, ms.step, p.main_tables);
      k = ms.step;
      apply_stop(st, ms);
    }
    emit_tables(st, kern, p.ph, p.dim, k, p.n_steps, p.main_tables);
    return p;
  }

  // Superposition: pointwise drift on shared snapshots until the first
  // measurement, which must be full so it collapses every trajectory onto a
  // single (outcome-affine) branch.
  int first_full = p.n_steps;
  if (!p.stops.empty()) {
    const PlannedMeasurement& pm0 = spec.measurements[p.stops.front().plan_index];
    if (int(pm0.coords.size()) < p.dim)
      throw Error("invalid-state: partial measurement of a superposition is unsupported");
    first_full = p.stops.front().step;
  }
  p.affine_begin = first_full;
  if (p.sel_step >= 0 && p.sel_step > p.affine_begin)
    throw Error("invalid-state: branch selection after a full measurement is redundant");

  p.shared.reserve(std::size_t(p.affine_begin) + 1);
  p.shared.push_back(psi0);
  for (int k = 0; k < p.affine_begin; ++k) p.shared.push_back(propagate(p.shared.back(), cfg.dt));

  if (p.sel_step >= 0) {
    for (int b = 0; b < 2 && b < int(psi0.branches().size()); ++b) {
      SymbolicState st;
      const Wavefunction& at_sel = p.shared[std::size_t(p.sel_step)];
      st.quad = at_sel.branches()[std::size_t(b)].quad;
      st.lin0 = at_sel.branches()[std::size_t(b)].lin;
      emit_tables(st, kern, p.ph, p.dim, p.sel_step, p.affine_begin, p.branch_tables[std::size_t(b)]);
    }
    if (psi0.branches().size() > 2)
      throw Error("invalid-state: branch selection supports two-branch superpositions");
  }

  if (p.affine_begin < p.n_steps) {
    // post-collapse tables; the first stop sits exactly at affine_begin
    SymbolicState st;
    st.cols.assign(p.n_slots, {});
    int k = p.affine_begin;
    for (const MeasStop& ms : p.stops) {
      emit_tables(st, kern, p.ph, p.dim, k, ms.step, p.main_tables);
      k = ms.step;
      apply_stop(st, ms);
    }
    emit_tables(st, kern, p.ph, p.dim, k, p.n_steps, p.main_tables);
  }
  return p;
}

struct WorkerCounters {
  std::uint64_t clamps{0};
  std::uint64_t unresolved{0};
};

void run_block(const Plan& p, const ExperimentSpec& spec, const std::vector<double>& x0,
               std::size_t j_begin, std::size_t j_end, Ensemble& ens, WorkerCounters& wc) {
  const int d = p.dim;
  const std::size_t n = ens.n_traj;
  std::vector<double> outc(p.n_slots, 0.0);

  for (std::size_t j = j_begin; j < j_end; ++j) {
    double x[2] = {x0[j * std::size_t(d)], d == 2 ? x0[j * std::size_t(d) + 1] : 0.0};
    int branch = -1;
    std::size_t next_stop = 0;
    std::fill(outc.begin(), outc.end(), 0.0);

    for (int k = 0; k <= p.n_steps; ++k) {
      if (const int r = p.rec_of_step[std::size_t(k)]; r >= 0)
        for (int i = 0; i < d; ++i)
          ens.data[(std::size_t(r) * std::size_t(d) + std::size_t(i)) * n + j] = x[i];

      if (k == p.sel_step && !p.shared.empty()) {
        BranchSelection sel = select_branch(p.shared[std::size_t(k)], x, p.sel_eps);
        branch = sel.branch;
        if (branch < 0) ++wc.unresolved;
      }

      while (next_stop < p.stops.size() && p.stops[next_stop].step == k) {
        const MeasStop& ms = p.stops[next_stop];
        const PlannedMeasurement& pm = spec.measurements[ms.plan_index];
        for (std::size_t c = 0; c < pm.coords.size(); ++c) {
          const double v = x[pm.coords[c]];
          outc[ms.slot_base + c] = v;
          ens.outcomes[(ms.slot_base + c) * n + j] = v;
        }
        ++next_stop;
      }

      if (k == p.n_steps) break;

      double b[2] = {0.0, 0.0};
      bool near = false;
      if (k < p.affine_begin) {
        if (branch >= 0 && k >= p.sel_step) {
          const AffineStep& a = p.branch_tables[std::size_t(branch)][std::size_t(k - p.sel_step)];
          for (int i = 0; i < d; ++i) {
            b[i] = a.c[i];
            for (int jj = 0; jj < d; ++jj) b[i] += a.A[i][jj] * x[jj];
          }
        } else {
          FieldSample f =
              velocity_field(p.shared[std::size_t(k)], x, VelocityKind::ForwardDrift);
          b[0] = f.v[0];
          b[1] = f.v[1];
          near = f.near_node;
        }
      } else {
        const AffineStep& a = p.main_tables[std::size_t(k - p.affine_begin)];
        for (int i = 0; i < d; ++i) {
          b[i] = a.c[i];
          for (int jj = 0; jj < d; ++jj) b[i] += a.A[i][jj] * x[jj];
          for (std::size_t s = 0; s < a.G.size(); ++s) b[i] += a.G[s][std::size_t(i)] * outc[s];
        }
      }

      double n2 = 0.0;
      for (int i = 0; i < d; ++i) n2 += b[i] * b[i];
      if (!std::isfinite(n2)) {
        b[0] = b[1] = 0.0;
        ++wc.clamps;
      } else if (n2 > p.b_max * p.b_max) {
        const double s = p.b_max / std::sqrt(n2);
        for (int i = 0; i < d; ++i) b[i] *= s;
        ++wc.clamps;
      } else if (near) {
        ++wc.clamps;
      }

      double z[2];
      rng::normal_pair(p.seed, std::uint32_t(j), std::uint32_t(k), rng::kWiener, z);
      for (int i = 0; i < d; ++i) x[i] += b[i] * p.dt + p.noise_sd[i] * z[i];
    }
  }
}

}  // namespace

Ensemble run_experiment(const ExperimentSpec& spec, const SdeConfig& cfg,
                        std::vector<double> record_times) {
  Plan plan = build_plan(spec, cfg, record_times);

  Ensemble ens;
  ens.dim = plan.dim;
  ens.n_traj = cfg.n_traj;
  ens.cfg = cfg;
  ens.record_times = std::move(record_times);
  ens.data.assign(ens.record_times.size() * std::size_t(plan.dim) * cfg.n_traj, 0.0);
  ens.outcomes.assign(plan.n_slots * cfg.n_traj, 0.0);
  for (const PlannedMeasurement& pm : spec.measurements) {
    MeasurementEvent ev;
    ev.t = pm.t;
    ev.coords = pm.coords;
    ev.width = pm.width;
    ens.schedule.push_back(std::move(ev));
  }

  const std::vector<double> x0 = sample_initial(spec.psi0, cfg.n_traj, cfg.seed);

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const std::size_t n_threads =
      std::max<std::size_t>(1, std::min<std::size_t>(cfg.threads > 0 ? std::size_t(cfg.threads) : hw,
                                                     cfg.n_traj));

  std::vector<WorkerCounters> counters(n_threads);
  if (n_threads == 1) {
    run_block(plan, spec, x0, 0, cfg.n_traj, ens, counters[0]);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(n_threads);
    for (std::size_t w = 0; w < n_threads; ++w) {
      const std::size_t lo = cfg.n_traj * w / n_threads;
      const std::size_t hi = cfg.n_traj * (w + 1) / n_threads;
      pool.emplace_back([&, w, lo, hi] {
        try {
          run_block(plan, spec, x0, lo, hi, ens, counters[w]);
        } catch (...) {
          errs[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
      if (e) std::rethrow_exception(e);
  }
  for (const WorkerCounters& wc : counters) {
    ens.clamp_events += wc.clamps;
    ens.unresolved_branches += wc.unresolved;
  }
  return ens;
}

}  // namespace nelson
