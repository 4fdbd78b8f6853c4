#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "nelsonlab/wavefunction.hpp"

namespace nelson {

struct SdeConfig {
  double dt{1e-3};
  double t_end{1.0};
  double t0{0.0};
  std::size_t n_traj{100000};
  std::uint64_t seed{1};
  double b_max{1e5};  // drift clamp near nodes
  int threads{0};     // 0 = available parallelism
};

// Time-dependent drift b(x, t) sampled on the integration grid.
class DriftSource {
 public:
  virtual ~DriftSource() = default;
  virtual int dim() const = 0;
  virtual FieldSample drift(const double* x, int step, double t) const = 0;
};

// Drift from per-step wavefunction snapshots shared by all trajectories.
class WavefunctionSchedule : public DriftSource {
 public:
  WavefunctionSchedule(const Wavefunction& psi0, double dt, int n_steps,
                       VelocityKind kind = VelocityKind::ForwardDrift);
  int dim() const override { return states_.front().dim(); }
  FieldSample drift(const double* x, int step, double t) const override;
  const Wavefunction& state(int step) const { return states_.at(std::size_t(step)); }

 private:
  std::vector<Wavefunction> states_;
  VelocityKind kind_;
};

// Drift given in closed form (used by oracle cross-checks).
class AnalyticDrift : public DriftSource {
 public:
  using Fn = std::function<void(const double* x, double t, double* b)>;
  AnalyticDrift(int dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}
  int dim() const override { return dim_; }
  FieldSample drift(const double* x, int, double t) const override {
    FieldSample s;
    fn_(x, t, s.v.data());
    return s;
  }

 private:
  int dim_;
  Fn fn_;
};

struct MeasurementEvent {
  double t{};
  std::vector<int> coords;
  std::array<double, 2> outcome{};
  double width{};
};

struct Trajectory {
  int dim{1};
  std::uint64_t traj_id{0};
  std::vector<double> times;
  std::vector<double> positions;  // times.size() * dim, row-major
  std::vector<MeasurementEvent> events;
  std::uint64_t clamp_events{0};
  double x(std::size_t k, int i = 0) const { return positions[k * std::size_t(dim) + i]; }
};

// Euler-Maruyama integration of dq = b dt + dW, E[dW_i^2] = 2 nu_i dt, with
// Wiener increments addressed by (seed, traj_id, step): bit-reproducible for
// a given (seed, traj_id) irrespective of scheduling.
Trajectory integrate(const DriftSource& drift, const Physical& ph, const double* x0,
                     const SdeConfig& cfg, std::uint64_t traj_id);

// i.i.d. samples from |psi|^2 (flat n x dim). Single branch: exact Gaussian
// sampling. Superpositions: rejection against the branch-mixture envelope
// n_branches * sum_j |psi_j|^2; persistent rejection (acceptance < 1e-3) is a
// configuration error.
std::vector<double> sample_initial(const Wavefunction& psi, std::size_t n, std::uint64_t seed);

// Exact Ornstein-Uhlenbeck quadrature driven by the given increments:
// X(t_n) = e^{-omega t_n} [X(0) + sum_k e^{omega t_k} dW_k] evaluated by the
// equivalent stable recursion X_{k+1} = e^{-omega dt} (X_k + dW_k).
double quadrature_ou_path(double x0, std::span<const double> dw, double omega, double dt);

struct QuadratureResult {
  double value{};
  // true when an interior step came within ~dt of a caustic of the collapsed
  // kernel (integrand 1/sin blows up there); flagged, never regularized.
  bool singular_window{false};
};

// Path solution of the delta-collapse drift started from the collapse center:
// X(t) = X0 cos(omega (t-s)) + sin(omega (t-s)) * sum dW_k / sin(omega tau_k).
// The noise factor carries sin(n pi) = 0 at half-period targets, so there the
// exact limit (-1)^n X0 is returned. xs must equal X0 (delta-limit start).
QuadratureResult quadrature_collapsed_path(double X0, double xs, std::span<const double> dw,
                                           double omega, double s, double t, double dt);

// Positions of all trajectories at the requested record times only
// (slice-major storage): full per-step paths at ensemble scale would not fit
// in memory, and any noise segment can be regenerated from (seed, traj, step).
struct Ensemble {
  int dim{1};
  std::size_t n_traj{0};
  SdeConfig cfg;
  std::vector<double> record_times;
  std::vector<double> data;  // [(r * dim + i) * n_traj + j]
  // per-measurement outcome slots, [(m * dim_m + c) * n_traj + j]
  std::vector<double> outcomes;
  std::vector<MeasurementEvent> schedule;  // one entry per planned measurement (outcome unset)
  std::uint64_t clamp_events{0};
  std::uint64_t unresolved_branches{0};

  std::size_t record_index(double t) const;  // throws Error("off-grid") if absent
  std::span<const double> slice(std::size_t r, int i = 0) const {
    return {data.data() + (r * std::size_t(dim) + std::size_t(i)) * n_traj, n_traj};
  }
};

struct BinEstimate {
  double x{};       // mean position of the samples in the bin
  double value{};   // estimated mean derivative
  double stderr_{};
  std::size_t count{};
};

enum class DerivDirection { Forward, Backward };

// Conditional mean-derivative estimators on equal-probability
// (quantile) bins of the time-t marginal. order 1: (x(t+dt)-x(t))/dt forward,
// (x(t)-x(t-dt))/dt backward. order 2 (forward only): the iterated estimator
// (x(t+2dt) - 2x(t+dt) + x(t))/dt^2, whose conditional mean tends to
// [d_t + b.grad + nu lap] b as dt -> 0.
std::vector<BinEstimate> estimate_mean_derivative(const Ensemble& ens, double t, double dt_est,
                                                  DerivDirection dir, int order = 1,
                                                  int coord = 0, int n_bins = 20);

}  // namespace nelson
