#include <doctest.h>

#include <cmath>
#include <set>

#include "nelsonlab/rng.hpp"

using namespace nelson;

TEST_SUITE("rng") {

// Published known-answer vectors for Philox-4x32 with 10 rounds.
TEST_CASE("philox known answers") {
  using rng::Counter;
  const Counter zero = rng::philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(zero == Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});

  const std::uint32_t f = 0xffffffffu;
  const Counter ones = rng::philox4x32({f, f, f, f}, {f, f});
  CHECK(ones == Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});

  const Counter pi = rng::philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                     {0xa4093822u, 0x299f31d0u});
  CHECK(pi == Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("u01 maps words into (0, 1]") {
  CHECK(rng::u01(0, 0) == 0x1.0p-53);  // exact: smallest representable draw
  CHECK(rng::u01(0, 0) > 0.0);
  CHECK(rng::u01(0xffffffffu, 0xffffffffu) == 1.0);
}

TEST_CASE("draws are pure functions of the address") {
  double a[2], b[2], c[2];
  rng::normal_pair(42, 7, 1000, rng::kWiener, a);
  rng::normal_pair(42, 7, 1000, rng::kWiener, b);
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
  rng::normal_pair(42, 7, 1000, rng::kInitGauss, c);  // other stream, other values
  CHECK(a[0] != c[0]);
  rng::normal_pair(43, 7, 1000, rng::kWiener, c);
  CHECK(a[0] != c[0]);
}

TEST_CASE("normal pairs have standard moments") {
  const int n = 100000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    double z[2];
    rng::normal_pair(1, std::uint32_t(i), 0, rng::kScatter, z);
    for (double v : {z[0], z[1]}) {
      s1 += v;
      s2 += v * v;
      s4 += v * v * v * v;
    }
  }
  const double m = s1 / (2 * n), var = s2 / (2 * n), kurt = s4 / (2 * n);
  CHECK(std::abs(m) < 3.0 / std::sqrt(2.0 * n));        // se = 1/sqrt(N)
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));
  CHECK(kurt == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("uniform pairs stay in (0, 1] with mean 1/2") {
  const int n = 50000;
  double s1 = 0;
  for (int i = 0; i < n; ++i) {
    double u[2];
    rng::uniform_pair(9, std::uint32_t(i), 3, rng::kInitUniform, u);
    REQUIRE(u[0] > 0.0);
    REQUIRE(u[0] <= 1.0);
    REQUIRE(u[1] > 0.0);
    REQUIRE(u[1] <= 1.0);
    s1 += u[0] + u[1];
  }
  CHECK(s1 / (2 * n) == doctest::Approx(0.5).epsilon(0.01));
}

}  // TEST_SUITE
