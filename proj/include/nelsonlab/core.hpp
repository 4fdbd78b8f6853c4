#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace nelson {

using cplx = std::complex<double>;

inline constexpr int kMaxDim = 2;
inline constexpr double kPi = 3.14159265358979323846;

// Density threshold (relative to the peak) below which drift evaluation
// reports a near-node condition instead of trusting the log-derivative.
inline constexpr double kNodeLogFloor = -69.07755278982137;  // log(1e-30)

// Every failure mode surfaces as nelson::Error; messages start with a short
// condition tag ("off-grid", "singular-time", "invalid-state", ...).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Complex symmetric matrix for dimension 1 or 2; entries (0,0), (0,1), (1,1).
struct CSym {
  cplx a00{}, a01{}, a11{};

  cplx operator()(int i, int j) const {
    if (i == j) return i == 0 ? a00 : a11;
    return a01;
  }
};

inline CSym operator+(const CSym& x, const CSym& y) {
  return {x.a00 + y.a00, x.a01 + y.a01, x.a11 + y.a11};
}
inline CSym operator*(cplx s, const CSym& x) { return {s * x.a00, s * x.a01, s * x.a11}; }

inline cplx det(const CSym& m, int d) {
  return d == 1 ? m.a00 : m.a00 * m.a11 - m.a01 * m.a01;
}

inline CSym inverse(const CSym& m, int d) {
  cplx dd = det(m, d);
  if (std::abs(dd) == 0.0) throw Error("singular-time: degenerate quadratic form");
  if (d == 1) return {1.0 / dd, 0.0, 0.0};
  return {m.a11 / dd, -m.a01 / dd, m.a00 / dd};
}

template <class T>
inline cplx quad_form(const CSym& m, const T* x, int d) {
  if (d == 1) return m.a00 * x[0] * x[0];
  return m.a00 * x[0] * x[0] + 2.0 * m.a01 * x[0] * x[1] + m.a11 * x[1] * x[1];
}

template <class T>
inline void mat_vec(const CSym& m, const T* x, cplx* out, int d) {
  if (d == 1) {
    out[0] = m.a00 * x[0];
    return;
  }
  out[0] = m.a00 * x[0] + m.a01 * x[1];
  out[1] = m.a01 * x[0] + m.a11 * x[1];
}

// One complex-Gaussian branch exp(x^T quad x + lin.x + log_amp).
// log_amp carries normalization, phase, and the branch weight in log space so
// that narrow Gaussians and small weights never underflow.
struct GaussianBranch {
  CSym quad;
  std::array<cplx, 2> lin{};
  cplx log_amp{};
};

// Per-coordinate oscillator parameters; omega = 0 marks a free coordinate.
struct Physical {
  std::array<double, 2> mass{1.0, 1.0};
  std::array<double, 2> omega{1.0, 1.0};
  double hbar{1.0};
};

// Diffusion coefficient nu_i = hbar / (2 m_i); E[dW_i^2] = 2 nu_i dt.
inline double diffusion_coeff(const Physical& ph, int i) { return ph.hbar / (2.0 * ph.mass[i]); }

// Ground-state width sigma^2 = hbar / (2 m omega) of coordinate i.
inline double ground_sigma2(const Physical& ph, int i) {
  return ph.hbar / (2.0 * ph.mass[i] * ph.omega[i]);
}

}  // namespace nelson
