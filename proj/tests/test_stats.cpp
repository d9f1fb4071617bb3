#include <cmath>

#include "adamlab/rng.hpp"
#include "adamlab/stats.hpp"
#include "doctest.h"

using namespace adamlab;

TEST_SUITE_BEGIN("stats");

TEST_CASE("ks distance basics") {
  std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
  CHECK(ks_distance(a, a) == doctest::Approx(0.0));
  std::vector<double> b = {10.0, 11.0, 12.0};
  CHECK(ks_distance(a, b) == doctest::Approx(1.0));
  // shifted samples: KS = fraction separated
  std::vector<double> c = {1.5, 2.5, 3.5, 4.5};
  CHECK(ks_distance(a, c) == doctest::Approx(0.25));
}

TEST_CASE("line fit recovers an exact line") {
  std::vector<double> x = {0.0, 1.0, 2.0, 3.0};
  std::vector<double> y = {1.0, 3.0, 5.0, 7.0};
  const auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("1d W2 equals the translation distance for shifted samples") {
  SequentialRng rng(5, 0);
  const int n = 20000;
  std::vector<double> a(n), b(n);
  for (int i = 0; i < n; ++i) {
    a[i] = rng.normal();
    b[i] = a[i] + 2.0;
  }
  CHECK(std::sqrt(w2_sq_1d(a, b)) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("1d W2 handles unequal sample sizes") {
  // point masses: W2^2 between delta_0 (n=2) and delta_1 (n=3) is 1
  std::vector<double> a = {0.0, 0.0};
  std::vector<double> b = {1.0, 1.0, 1.0};
  CHECK(w2_sq_1d(a, b) == doctest::Approx(1.0));
  // uniform {0,1} vs uniform {0,1,2}: quantile functions differ by 1 on
  // (1/3,1/2] and (2/3,1], so the integral is 1/6 + 1/3 = 1/2
  std::vector<double> c = {0.0, 1.0};
  std::vector<double> d = {0.0, 1.0, 2.0};
  CHECK(w2_sq_1d(c, d) == doctest::Approx(0.5));
}

TEST_SUITE_END();
