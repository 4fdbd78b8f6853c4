#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "nelsonlab/core.hpp"

namespace nelson::rng {

// Counter-based generator (Philox-4x32-10). Draws are addressed by
// (seed, trajectory, index, stream) with no sequential state, so worker
// threads consume identical randomness regardless of scheduling and any
// path segment can be regenerated exactly.

inline constexpr std::uint32_t kM0 = 0xD2511F53u;
inline constexpr std::uint32_t kM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kW1 = 0xBB67AE85u;

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline Counter philox4x32(Counter c, Key k) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(kM0) * c[0];
    const std::uint64_t p1 = std::uint64_t(kM1) * c[2];
    c = {std::uint32_t(p1 >> 32) ^ c[1] ^ k[0], std::uint32_t(p1),
         std::uint32_t(p0 >> 32) ^ c[3] ^ k[1], std::uint32_t(p0)};
    k[0] += kW0;
    k[1] += kW1;
  }
  return c;
}

// Streams keep separate uses of the counter space from colliding.
enum Stream : std::uint32_t {
  kWiener = 0,       // SDE increments, index = step
  kInitGauss = 1,    // initial-position gaussians, index = attempt
  kInitUniform = 2,  // branch pick + accept/reject, index = attempt
  kScatter = 3       // miscellaneous test points
};

// Uniform in (0, 1]: 53-bit mantissa from two words; never 0, so log() is safe.
inline double u01(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t(hi) << 32) | lo;
  return double((bits >> 11) + 1) * 0x1.0p-53;
}

// Two standard normals (Box-Muller) for (traj, index) in the given stream.
inline void normal_pair(std::uint64_t seed, std::uint32_t traj, std::uint32_t index,
                        std::uint32_t stream, double out[2]) {
  const Counter r = philox4x32({index, 0u, traj, stream},
                               {std::uint32_t(seed), std::uint32_t(seed >> 32)});
  const double u1 = u01(r[0], r[1]);
  const double u2 = u01(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  out[0] = rad * std::cos(2.0 * kPi * u2);
  out[1] = rad * std::sin(2.0 * kPi * u2);
}

// Two independent uniforms in (0, 1] for (traj, index) in the given stream.
inline void uniform_pair(std::uint64_t seed, std::uint32_t traj, std::uint32_t index,
                         std::uint32_t stream, double out[2]) {
  const Counter r = philox4x32({index, 1u, traj, stream},
                               {std::uint32_t(seed), std::uint32_t(seed >> 32)});
  out[0] = u01(r[0], r[1]);
  out[1] = u01(r[2], r[3]);
}

}  // namespace nelson::rng
