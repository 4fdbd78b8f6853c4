#include "nelsonlab/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nelson {

Wavefunction apply_position_measurement(const Wavefunction& psi, std::span<const int> coords,
                                        std::span<const double> outcome, double width) {
  const int d = psi.dim();
  if (!(width > 0.0)) throw Error("invalid-state: collapse width must be positive");
  if (coords.empty() || coords.size() != outcome.size() || coords.size() > std::size_t(d))
    throw Error("invalid-state: measured coordinates and outcomes must match");
  for (std::size_t k = 0; k < coords.size(); ++k) {
    if (coords[k] < 0 || coords[k] >= d) throw Error("invalid-state: coordinate out of range");
    if (k > 0 && coords[k] <= coords[k - 1])
      throw Error("invalid-state: coordinates must be unique and ascending");
    if (!std::isfinite(outcome[k])) throw Error("invalid-state: non-finite outcome");
  }

  if (int(coords.size()) == d) {
    // Full measurement: the conditional state is the collapse Gaussian itself.
    double X0[2] = {outcome[0], coords.size() == 2 ? outcome[1] : 0.0};
    return make_collapsed_state({X0, std::size_t(d)}, width, psi.physical(), psi.time());
  }

  // Partial measurement: multiply by the width-w Gaussian amplitude
  // exp(-(x_c - X)^2 / (4 w^2)) / (2 pi w^2)^{1/4} per measured coordinate.
  const double q = -1.0 / (4.0 * width * width);
  std::vector<GaussianBranch> out = psi.branches();
  for (GaussianBranch& g : out) {
    for (std::size_t k = 0; k < coords.size(); ++k) {
      const int c = coords[k];
      const double X = outcome[k];
      if (c == 0)
        g.quad.a00 += q;
      else
        g.quad.a11 += q;
      g.lin[std::size_t(c)] += X / (2.0 * width * width);
      g.log_amp += q * X * X - 0.25 * std::log(2.0 * kPi * width * width);
    }
  }
  Wavefunction product(d, psi.physical(), std::move(out), psi.time());
  const double n2 = norm_squared(product);
  if (!(n2 > 0.0) || !std::isfinite(n2))
    throw Error("invalid-state: measurement produced a non-normalizable state");
  return normalized(product);
}

BranchSelection select_branch(const Wavefunction& psi, const double* x, double eps) {
  const auto& br = psi.branches();
  const int d = psi.dim();
  if (br.size() < 2) return {psi, 0, 0.0};

  double lmax = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(br.size());
  for (std::size_t j = 0; j < br.size(); ++j) {
    cplx L = quad_form(br[j].quad, x, d) + br[j].lin[0] * x[0] +
             (d == 2 ? br[j].lin[1] * x[1] : cplx{}) + br[j].log_amp;
    logs[j] = 2.0 * L.real();
    lmax = std::max(lmax, logs[j]);
  }
  if (!std::isfinite(lmax)) return {psi, -1, 1.0};  // common node: nothing to select

  double total = 0.0;
  std::size_t jmax = 0;
  for (std::size_t j = 0; j < br.size(); ++j) {
    total += std::exp(logs[j] - lmax);
    if (logs[j] == lmax) jmax = j;
  }
  const double frac = std::exp(logs[jmax] - lmax) / total;
  if (frac < 1.0 - eps) return {psi, -1, 1.0 - frac};

  Wavefunction keep(d, psi.physical(), {br[jmax]}, psi.time());
  return {normalized(keep), int(jmax), 1.0 - frac};
}

}  // namespace nelson
