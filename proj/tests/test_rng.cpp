#include <cmath>

#include "adamlab/rng.hpp"
#include "adamlab/stats.hpp"
#include "doctest.h"

using namespace adamlab;

TEST_SUITE_BEGIN("rng");

// Known-answer vectors for Philox 4x32-10 from the reference implementation
// (Salmon et al., random123 kat_vectors).
TEST_CASE("philox known answers") {
  {
    const auto out = philox4x32({0u, 0u, 0u, 0u}, {0u, 0u});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
  }
  {
    const auto out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);
  }
  {
    const auto out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("stream draws are pure functions of the counter") {
  GaussianStream s(1234, 7);
  const double a = s.normal(42, 3);
  const double b = s.normal(42, 3);
  CHECK(a == b);
  CHECK(s.normal(42, 4) != a);
  CHECK(s.normal(43, 3) != a);
  GaussianStream other_seed(1235, 7);
  CHECK(other_seed.normal(42, 3) != a);
  GaussianStream other_stream(1234, 8);
  CHECK(other_stream.normal(42, 3) != a);
}

TEST_CASE("normals have the right first moments") {
  GaussianStream s(2024, 0);
  const int n = 200000;
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = s.normal(i, 0);
  const auto mv = mean_var(v);
  CHECK(std::abs(mv.mean) < 4.0 * mv.std_error());
  CHECK(mv.variance == doctest::Approx(1.0).epsilon(0.02));
  // kurtosis of a standard normal is 3
  double k4 = 0.0;
  for (double t : v) k4 += t * t * t * t;
  k4 /= n;
  CHECK(k4 == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("uniforms live in (0,1)") {
  GaussianStream s(99, 1);
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform(i, 0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_SUITE_END();
