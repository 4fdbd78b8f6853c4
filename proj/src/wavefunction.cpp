#include "nelsonlab/wavefunction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nelson {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_physical(const Physical& ph, int dim) {
  if (!(ph.hbar > 0.0)) throw Error("invalid-state: hbar must be positive");
  for (int i = 0; i < dim; ++i) {
    if (!(ph.mass[i] > 0.0)) throw Error("invalid-state: mass must be positive");
    if (!(ph.omega[i] >= 0.0)) throw Error("invalid-state: omega must be >= 0");
  }
}

// Real part of the quadratic form must be negative definite (normalizable branch).
bool re_negative_definite(const CSym& q, int d) {
  const double r00 = q.a00.real();
  if (d == 1) return r00 < 0.0;
  const double r11 = q.a11.real(), r01 = q.a01.real();
  return r00 < 0.0 && (r00 * r11 - r01 * r01) > 0.0;
}

// max_x [ x^T A x + r.x ] for negative-definite real A (packed like CSym.re).
double real_quad_max(double a00, double a01, double a11, const double* r, int d) {
  if (d == 1) return -0.25 * r[0] * r[0] / a00;
  const double dd = a00 * a11 - a01 * a01;
  // x* = -A^{-1} r / 2; value = -(1/4) r^T A^{-1} r
  const double i00 = a11 / dd, i01 = -a01 / dd, i11 = a00 / dd;
  const double q = r[0] * (i00 * r[0] + i01 * r[1]) + r[1] * (i01 * r[0] + i11 * r[1]);
  return -0.25 * q;
}

double branch_peak_log_density(const GaussianBranch& g, int d) {
  const double re[2] = {g.lin[0].real(), g.lin[1].real()};
  const double sup =
      real_quad_max(g.quad.a00.real(), g.quad.a01.real(), g.quad.a11.real(), re, d) +
      g.log_amp.real();
  return 2.0 * sup;
}

}  // namespace

Wavefunction::Wavefunction(int dim, const Physical& ph, std::vector<GaussianBranch> branches,
                           double time)
    : dim_(dim), ph_(ph), branches_(std::move(branches)), time_(time) {
  if (dim_ < 1 || dim_ > kMaxDim) throw Error("invalid-state: dimension must be 1 or 2");
  if (branches_.empty()) throw Error("invalid-state: no branches");
  if (!std::isfinite(time_)) throw Error("invalid-state: non-finite time");
  validate_physical(ph_, dim_);
  double peak = -kInf;
  for (const auto& g : branches_) {
    if (!re_negative_definite(g.quad, dim_))
      throw Error("invalid-state: branch quadratic form is not negative definite");
    for (int i = 0; i < dim_; ++i)
      if (!std::isfinite(g.lin[i].real()) || !std::isfinite(g.lin[i].imag()))
        throw Error("invalid-state: non-finite linear coefficient");
    if (!std::isfinite(g.log_amp.real())) throw Error("invalid-state: non-finite amplitude");
    peak = std::max(peak, branch_peak_log_density(g, dim_));
  }
  // Upper bound for superpositions: constructive interference of n branches.
  peak_log_density_ = peak + 2.0 * std::log(double(branches_.size()));
}

Wavefunction make_ground_state(double mass, double omega, double hbar) {
  Physical ph;
  ph.mass = {mass, mass};
  ph.omega = {omega, omega};
  ph.hbar = hbar;
  if (!(omega > 0.0)) throw Error("invalid-state: ground state needs omega > 0");
  const double s2 = hbar / (2.0 * mass * omega);
  GaussianBranch g;
  g.quad.a00 = -1.0 / (4.0 * s2);
  g.log_amp = -0.25 * std::log(2.0 * kPi * s2);
  return Wavefunction(1, ph, {g}, 0.0);
}

Wavefunction make_collapsed_state(std::span<const double> X0, double w, const Physical& ph,
                                  double time) {
  const int d = int(X0.size());
  if (d < 1 || d > kMaxDim) throw Error("invalid-state: X0 must have 1 or 2 components");
  if (!(w > 0.0)) throw Error("invalid-state: collapse width must be positive");
  GaussianBranch g;
  const double iw2 = 1.0 / (4.0 * w * w);
  g.quad.a00 = -iw2;
  g.log_amp = -X0[0] * X0[0] * iw2 - 0.25 * std::log(2.0 * kPi * w * w);
  g.lin[0] = 2.0 * X0[0] * iw2;
  if (d == 2) {
    g.quad.a11 = -iw2;
    g.lin[1] = 2.0 * X0[1] * iw2;
    g.log_amp += -X0[1] * X0[1] * iw2 - 0.25 * std::log(2.0 * kPi * w * w);
  }
  return Wavefunction(d, ph, {g}, time);
}

Wavefunction make_pair_state(double sigma2, double r, const Physical& ph) {
  if (!(sigma2 > 0.0) || !(std::abs(r) < 1.0))
    throw Error("invalid-state: need sigma2 > 0 and |r| < 1");
  // quad = -C^{-1}/4 with C = sigma2 [[1, r], [r, 1]]
  const double dd = sigma2 * sigma2 * (1.0 - r * r);
  GaussianBranch g;
  g.quad.a00 = g.quad.a11 = -0.25 * sigma2 / dd;
  g.quad.a01 = 0.25 * sigma2 * r / dd;
  g.log_amp = -0.25 * std::log(4.0 * kPi * kPi * dd);
  return Wavefunction(2, ph, {g}, 0.0);
}

cplx log_evaluate(const Wavefunction& psi, const double* x) {
  const int d = psi.dim();
  const auto& br = psi.branches();
  double rmax = -kInf;
  std::vector<cplx> L(br.size());
  for (std::size_t j = 0; j < br.size(); ++j) {
    L[j] = quad_form(br[j].quad, x, d) + br[j].lin[0] * x[0] + br[j].log_amp;
    if (d == 2) L[j] += br[j].lin[1] * x[1];
    rmax = std::max(rmax, L[j].real());
  }
  cplx s = 0.0;
  for (const auto& l : L) s += std::exp(l - rmax);
  if (s == cplx(0.0, 0.0)) return {-kInf, 0.0};
  return rmax + std::log(s);
}

cplx evaluate(const Wavefunction& psi, const double* x) {
  const cplx l = log_evaluate(psi, x);
  if (l.real() == -kInf) return 0.0;
  return std::exp(l);
}

LogDerivs log_derivatives(const Wavefunction& psi, const double* x) {
  const int d = psi.dim();
  const auto& br = psi.branches();
  LogDerivs out;

  if (br.size() == 1) {
    const GaussianBranch& g = br[0];
    cplx qx[2];
    mat_vec(g.quad, x, qx, d);
    for (int i = 0; i < d; ++i) out.grad[i] = 2.0 * qx[i] + g.lin[i];
    out.hess = 2.0 * g.quad;
    const cplx L = quad_form(g.quad, x, d) + g.lin[0] * x[0] + (d == 2 ? g.lin[1] * x[1] : 0.0) +
                   g.log_amp;
    out.log_density = 2.0 * L.real();
    out.near_node = out.log_density < psi.peak_log_density() + kNodeLogFloor;
    return out;
  }

  double rmax = -kInf;
  std::vector<cplx> L(br.size());
  std::vector<std::array<cplx, 2>> grads(br.size());
  for (std::size_t j = 0; j < br.size(); ++j) {
    const GaussianBranch& g = br[j];
    cplx qx[2];
    mat_vec(g.quad, x, qx, d);
    for (int i = 0; i < d; ++i) grads[j][i] = 2.0 * qx[i] + g.lin[i];
    L[j] = quad_form(g.quad, x, d) + g.lin[0] * x[0] + (d == 2 ? g.lin[1] * x[1] : 0.0) +
           g.log_amp;
    rmax = std::max(rmax, L[j].real());
  }
  cplx W = 0.0;
  std::vector<cplx> wj(br.size());
  for (std::size_t j = 0; j < br.size(); ++j) {
    wj[j] = std::exp(L[j] - rmax);
    W += wj[j];
  }
  if (W == cplx(0.0, 0.0)) {
    out.log_density = -kInf;
    out.near_node = true;
    return out;
  }
  // grad log psi = sum_j w_j g_j / W;  hess = sum_j w_j (2Q_j + g_j g_j^T)/W - grad grad^T
  cplx grad[2] = {0.0, 0.0};
  CSym h{};
  for (std::size_t j = 0; j < br.size(); ++j) {
    const cplx c = wj[j] / W;
    for (int i = 0; i < d; ++i) grad[i] += c * grads[j][i];
    h.a00 += c * (2.0 * br[j].quad.a00 + grads[j][0] * grads[j][0]);
    if (d == 2) {
      h.a01 += c * (2.0 * br[j].quad.a01 + grads[j][0] * grads[j][1]);
      h.a11 += c * (2.0 * br[j].quad.a11 + grads[j][1] * grads[j][1]);
    }
  }
  h.a00 -= grad[0] * grad[0];
  if (d == 2) {
    h.a01 -= grad[0] * grad[1];
    h.a11 -= grad[1] * grad[1];
  }
  out.grad = {grad[0], grad[1]};
  out.hess = h;
  out.log_density = 2.0 * (rmax + std::log(std::abs(W)));
  out.near_node = out.log_density < psi.peak_log_density() + kNodeLogFloor;
  return out;
}

FieldSample velocity_field(const Wavefunction& psi, const double* x, VelocityKind kind) {
  const LogDerivs ld = log_derivatives(psi, x);
  const Physical& ph = psi.physical();
  FieldSample out;
  out.near_node = ld.near_node;
  for (int i = 0; i < psi.dim(); ++i) {
    const double c = ph.hbar / ph.mass[i];
    const double re = ld.grad[i].real(), im = ld.grad[i].imag();
    switch (kind) {
      case VelocityKind::ForwardDrift: out.v[i] = c * (im + re); break;
      case VelocityKind::BackwardDrift: out.v[i] = c * (im - re); break;
      case VelocityKind::Current: out.v[i] = c * im; break;
      case VelocityKind::Osmotic: out.v[i] = c * re; break;
    }
  }
  return out;
}

int DriftField::dim() const { return psi_->dim(); }

DriftField drift_field(const Wavefunction& psi, VelocityKind kind) {
  return DriftField(psi, kind);
}

namespace detail {

StepKernel step_kernel(const Physical& ph, int dim, double tau) {
  if (!(tau > 0.0)) throw Error("singular-time: propagation step must be positive");
  const cplx I(0.0, 1.0);
  StepKernel k;
  k.dim = dim;
  for (int i = 0; i < dim; ++i) {
    const double m = ph.mass[i], w = ph.omega[i], hb = ph.hbar;
    if (w > 0.0) {
      const double s = std::sin(w * tau), c = std::cos(w * tau);
      if (!(s > 0.0)) throw Error("singular-time: step crosses a propagator caustic");
      k.a[i] = I * m * w * c / (2.0 * hb * s);
      k.beta[i] = -I * m * w / (hb * s);
      k.logN[i] = 0.5 * std::log(m * w / (2.0 * kPi * hb * s)) - I * (kPi / 4.0);
    } else {
      k.a[i] = I * m / (2.0 * hb * tau);
      k.beta[i] = -I * m / (hb * tau);
      k.logN[i] = 0.5 * std::log(m / (2.0 * kPi * hb * tau)) - I * (kPi / 4.0);
    }
  }
  return k;
}

GaussianBranch advance_branch(const GaussianBranch& g, const StepKernel& k, CSym* S_out) {
  const int d = k.dim;
  CSym M = g.quad;
  M.a00 += k.a[0];
  if (d == 2) M.a11 += k.a[1];
  const cplx detM = det(M, d);
  if (std::abs(detM) < 1e-300) throw Error("singular-time: kernel integral degenerate");
  CSym S;
  if (d == 1) {
    S.a00 = 1.0 / detM;
  } else {
    S = {M.a11 / detM, -M.a01 / detM, M.a00 / detM};
  }
  if (S_out) *S_out = S;

  GaussianBranch out;
  out.quad.a00 = k.a[0] - 0.25 * k.beta[0] * S.a00 * k.beta[0];
  if (d == 2) {
    out.quad.a01 = -0.25 * k.beta[0] * S.a01 * k.beta[1];
    out.quad.a11 = k.a[1] - 0.25 * k.beta[1] * S.a11 * k.beta[1];
  }
  cplx Sl[2];
  mat_vec(S, g.lin.data(), Sl, d);
  out.lin[0] = -0.5 * k.beta[0] * Sl[0];
  if (d == 2) out.lin[1] = -0.5 * k.beta[1] * Sl[1];

  const cplx lSl = g.lin[0] * Sl[0] + (d == 2 ? g.lin[1] * Sl[1] : cplx{});
  const cplx det_negM = (d == 1) ? -detM : detM;  // det(-M) = (-1)^d det(M)
  cplx logs = k.logN[0];
  if (d == 2) logs += k.logN[1];
  out.log_amp = g.log_amp + logs + 0.5 * double(d) * std::log(kPi) - 0.5 * std::log(det_negM) -
                0.25 * lSl;
  return out;
}

}  // namespace detail

Wavefunction propagate(const Wavefunction& psi, double duration) {
  if (!(duration >= 0.0)) throw Error("invalid-state: propagation duration must be >= 0");
  if (duration == 0.0) return psi;
  const Physical& ph = psi.physical();
  double wmax = 0.0;
  for (int i = 0; i < psi.dim(); ++i) wmax = std::max(wmax, ph.omega[i]);
  int chunks = 1;
  if (wmax > 0.0)
    chunks = std::max(1, int(std::ceil(duration * wmax / (0.5 * kPi) - 1e-12)));
  const double tau = duration / chunks;
  const detail::StepKernel k = detail::step_kernel(ph, psi.dim(), tau);
  std::vector<GaussianBranch> out = psi.branches();
  for (int c = 0; c < chunks; ++c)
    for (auto& g : out) g = detail::advance_branch(g, k);
  return Wavefunction(psi.dim(), ph, std::move(out), psi.time() + duration);
}

double norm_squared(const Wavefunction& psi) {
  const int d = psi.dim();
  const auto& br = psi.branches();
  // sum over branch pairs of the exact Gaussian integral
  // int exp(x^T A x + v.x + c) dx = pi^{d/2} / sqrt(det(-A)) exp(-v^T A^{-1} v / 4 + c)
  cplx total = 0.0;
  for (std::size_t j = 0; j < br.size(); ++j) {
    for (std::size_t kk = 0; kk < br.size(); ++kk) {
      const GaussianBranch& gj = br[j];
      const GaussianBranch& gk = br[kk];
      CSym A{gj.quad.a00 + std::conj(gk.quad.a00), gj.quad.a01 + std::conj(gk.quad.a01),
             gj.quad.a11 + std::conj(gk.quad.a11)};
      const cplx v[2] = {gj.lin[0] + std::conj(gk.lin[0]), gj.lin[1] + std::conj(gk.lin[1])};
      const cplx c = gj.log_amp + std::conj(gk.log_amp);
      const CSym Ainv = inverse(A, d);
      cplx Av[2];
      mat_vec(Ainv, v, Av, d);
      const cplx vAv = v[0] * Av[0] + (d == 2 ? v[1] * Av[1] : cplx{});
      const cplx det_negA = (d == 1) ? -A.a00 : det(A, d);
      total += std::exp(c - 0.25 * vAv + 0.5 * double(d) * std::log(kPi) -
                        0.5 * std::log(det_negA));
    }
  }
  return total.real();
}

Wavefunction normalized(const Wavefunction& psi) {
  const double n2 = norm_squared(psi);
  if (!(n2 > 0.0)) throw Error("invalid-state: vanishing norm");
  const double shift = 0.5 * std::log(n2);
  std::vector<GaussianBranch> out = psi.branches();
  for (auto& g : out) g.log_amp -= shift;
  return Wavefunction(psi.dim(), psi.physical(), std::move(out), psi.time());
}

std::array<double, 2> density_log_gradient(const Wavefunction& psi, const double* x) {
  const int d = psi.dim();
  const auto& br = psi.branches();
  // rho = sum_{j,k} exp(L_j + conj L_k); grad rho = sum (g_j + conj g_k) exp(...)
  double rmax = -kInf;
  std::vector<cplx> L(br.size());
  std::vector<std::array<cplx, 2>> g(br.size());
  for (std::size_t j = 0; j < br.size(); ++j) {
    cplx qx[2];
    mat_vec(br[j].quad, x, qx, d);
    for (int i = 0; i < d; ++i) g[j][i] = 2.0 * qx[i] + br[j].lin[i];
    L[j] = quad_form(br[j].quad, x, d) + br[j].lin[0] * x[0] +
           (d == 2 ? br[j].lin[1] * x[1] : 0.0) + br[j].log_amp;
    rmax = std::max(rmax, L[j].real());
  }
  cplx rho = 0.0, grad[2] = {0.0, 0.0};
  for (std::size_t j = 0; j < br.size(); ++j) {
    for (std::size_t kk = 0; kk < br.size(); ++kk) {
      const cplx e = std::exp(L[j] + std::conj(L[kk]) - 2.0 * rmax);
      rho += e;
      for (int i = 0; i < d; ++i) grad[i] += (g[j][i] + std::conj(g[kk][i])) * e;
    }
  }
  if (rho == cplx(0.0, 0.0)) throw Error("near-node: density vanishes");
  return {(grad[0] / rho).real(), d == 2 ? (grad[1] / rho).real() : 0.0};
}

double ExpSum1D::operator()(double x) const {
  double s = 0.0;
  for (const auto& t : terms) s += std::exp(t.a * x * x + t.b * x + t.c).real();
  return s;
}

ExpSum1D marginal_density(const Wavefunction& psi, int coord) {
  const int d = psi.dim();
  if (coord < 0 || coord >= d) throw Error("invalid-state: marginal coordinate out of range");
  const auto& br = psi.branches();
  ExpSum1D out;
  out.terms.reserve(br.size() * br.size());
  for (std::size_t j = 0; j < br.size(); ++j) {
    for (std::size_t kk = 0; kk < br.size(); ++kk) {
      const GaussianBranch& gj = br[j];
      const GaussianBranch& gk = br[kk];
      const CSym A{gj.quad.a00 + std::conj(gk.quad.a00), gj.quad.a01 + std::conj(gk.quad.a01),
                   gj.quad.a11 + std::conj(gk.quad.a11)};
      const cplx v[2] = {gj.lin[0] + std::conj(gk.lin[0]), gj.lin[1] + std::conj(gk.lin[1])};
      const cplx c = gj.log_amp + std::conj(gk.log_amp);
      if (d == 1) {
        out.terms.push_back({A.a00, v[0], c});
        continue;
      }
      // integrate out the other coordinate o: complete the square in x_o
      const int o = 1 - coord;
      const cplx Aoo = A(o, o), Aco = A(coord, o);
      // int exp(Aoo y^2 + (v_o + 2 Aco x) y) dy = sqrt(pi / -Aoo) exp(-(v_o + 2 Aco x)^2 / (4 Aoo))
      const cplx a = A(coord, coord) - Aco * Aco / Aoo;
      const cplx b = v[coord] - v[o] * Aco / Aoo;
      const cplx cc = c - v[o] * v[o] / (4.0 * Aoo) + 0.5 * std::log(kPi / (-Aoo));
      out.terms.push_back({a, b, cc});
    }
  }
  return out;
}

double hjm_residual(const Wavefunction& psi, const double* x, double t, double dt_res) {
  if (!(dt_res > 0.0)) throw Error("invalid-state: dt_res must be positive");
  if (t < psi.time() - 1e-12) throw Error("invalid-state: residual time precedes the state");
  const double tc = std::max(t, psi.time() + dt_res);
  const Wavefunction at_c = propagate(psi, tc - psi.time());
  const Wavefunction at_m = propagate(psi, tc - dt_res - psi.time());
  const Wavefunction at_p = propagate(psi, tc + dt_res - psi.time());

  const LogDerivs ld = log_derivatives(at_c, x);
  if (ld.near_node) throw Error("near-node: residual undefined below the density floor");
  const cplx lp = log_evaluate(at_p, x), lm = log_evaluate(at_m, x);
  const Physical& ph = psi.physical();
  // dS/dt from the phase difference, wrapped to the principal branch
  double dphi = (lp - lm).imag();
  dphi = std::remainder(dphi, 2.0 * kPi);
  const double dSdt = ph.hbar * dphi / (2.0 * dt_res);

  double resid = dSdt;
  for (int i = 0; i < psi.dim(); ++i) {
    const double dS = ph.hbar * ld.grad[i].imag();           // d_i S
    const double dR = ld.grad[i].real();                     // d_i log|psi|
    const double d2R = (i == 0 ? ld.hess.a00 : ld.hess.a11).real();
    resid += dS * dS / (2.0 * ph.mass[i]);
    resid -= ph.hbar * ph.hbar / (2.0 * ph.mass[i]) * (d2R + dR * dR);
    resid += 0.5 * ph.mass[i] * ph.omega[i] * ph.omega[i] * x[i] * x[i];
  }
  return std::abs(resid);
}

}  // namespace nelson
