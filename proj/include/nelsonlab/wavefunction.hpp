#pragma once

#include <span>
#include <vector>

#include "nelsonlab/core.hpp"

namespace nelson {

// Superposition of complex-Gaussian branches in d <= 2 configuration-space
// dimensions, evolving under a harmonic (or free, omega = 0) Hamiltonian.
// Immutable after construction; safe to share across threads.
class Wavefunction {
 public:
  Wavefunction(int dim, const Physical& ph, std::vector<GaussianBranch> branches, double time);

  int dim() const { return dim_; }
  double time() const { return time_; }
  const Physical& physical() const { return ph_; }
  const std::vector<GaussianBranch>& branches() const { return branches_; }

  // Upper bound on sup_x log|psi(x)|^2; reference level for node detection.
  double peak_log_density() const { return peak_log_density_; }

 private:
  int dim_;
  Physical ph_;
  std::vector<GaussianBranch> branches_;
  double time_;
  double peak_log_density_;
};

// Harmonic ground state: variance sigma^2 = hbar/(2 m omega), zero phase at t=0.
Wavefunction make_ground_state(double mass, double omega, double hbar);

// Post-measurement Gaussian centered at X0 whose |psi|^2 has standard
// deviation w in every coordinate. `ph`/`time` seed subsequent propagation.
Wavefunction make_collapsed_state(std::span<const double> X0, double w, const Physical& ph,
                                  double time = 0.0);

// Correlated two-coordinate Gaussian with Cov = sigma2 * [[1, r], [r, 1]].
Wavefunction make_pair_state(double sigma2, double r, const Physical& ph);

cplx evaluate(const Wavefunction& psi, const double* x);
cplx log_evaluate(const Wavefunction& psi, const double* x);  // -inf real part at exact nodes

struct LogDerivs {
  std::array<cplx, 2> grad{};  // d/dx_i log psi
  CSym hess;                   // d^2/dx_i dx_j log psi
  double log_density{};        // log |psi|^2
  bool near_node{false};       // density below 1e-30 x peak
};
LogDerivs log_derivatives(const Wavefunction& psi, const double* x);

enum class VelocityKind { ForwardDrift, BackwardDrift, Current, Osmotic };

struct FieldSample {
  std::array<double, 2> v{};
  bool near_node{false};
};

// b = v + u, b* = v - u, v = (hbar/m) Im grad log psi, u = (hbar/m) Re grad log psi.
FieldSample velocity_field(const Wavefunction& psi, const double* x, VelocityKind kind);

// Lightweight callable view over one velocity component family of a state.
class DriftField {
 public:
  DriftField(const Wavefunction& psi, VelocityKind kind) : psi_(&psi), kind_(kind) {}
  FieldSample operator()(const double* x) const { return velocity_field(*psi_, x, kind_); }
  int dim() const;

 private:
  const Wavefunction* psi_;  // not owned; must outlive the field
  VelocityKind kind_;
};
DriftField drift_field(const Wavefunction& psi, VelocityKind kind = VelocityKind::ForwardDrift);

// Closed-form propagation by a non-negative duration. Durations are split
// into chunks no longer than a quarter period of the stiffest coordinate so
// every complex square root / logarithm stays on its principal branch; the
// resulting branch parameters are exact for all times, including past the
// kernel caustics at multiples of the half period.
Wavefunction propagate(const Wavefunction& psi, double duration);

// Exact Gaussian integral of |psi|^2 (no quadrature).
double norm_squared(const Wavefunction& psi);
Wavefunction normalized(const Wavefunction& psi);

// d log rho / dx_i computed from the branch-pair expansion of rho = |psi|^2 -
// an arithmetic path independent of log_derivatives, used by identity checks.
std::array<double, 2> density_log_gradient(const Wavefunction& psi, const double* x);

// |psi|^2 marginalized onto one coordinate, as an explicit sum of complex
// exponential terms exp(a x^2 + b x + c); evaluation returns the real part.
struct ExpSum1D {
  struct Term {
    cplx a, b, c;
  };
  std::vector<Term> terms;
  double operator()(double x) const;
};
ExpSum1D marginal_density(const Wavefunction& psi, int coord);

// Absolute residual of the modified Hamilton-Jacobi equation (the phase-side
// Madelung equation) at (x, t): exact spatial derivatives from the branch
// parameters, central time difference (step dt_res) for dS/dt. Requires
// t >= psi.time(); when t is within dt_res of psi.time() the evaluation
// window is shifted up to psi.time() + dt_res.
double hjm_residual(const Wavefunction& psi, const double* x, double t, double dt_res = 1e-4);

namespace detail {

// Per-coordinate closed-form propagator coefficients for one sub-quarter-period step.
struct StepKernel {
  std::array<cplx, 2> a{}, beta{}, logN{};
  int dim{1};
};
StepKernel step_kernel(const Physical& ph, int dim, double tau);

// One kernel-integral update of a branch; S_out (optional) receives
// (quad + diag a)^{-1}, the matrix that also maps linear coefficients:
// lin' = -(1/2) diag(beta) S lin.
GaussianBranch advance_branch(const GaussianBranch& g, const StepKernel& k, CSym* S_out = nullptr);

}  // namespace detail

}  // namespace nelson
