#include <cmath>

#include "adamlab/adam_discrete.hpp"
#include "adamlab/sde.hpp"
#include "doctest.h"

using namespace adamlab;

TEST_SUITE_BEGIN("adam_discrete");

TEST_CASE("bias factors: exact endpoints") {
  const auto [ta0, tb0] = bias_factors(0, 0.01, 1.0, 2.0);
  CHECK(ta0 == doctest::Approx(1.0));
  CHECK(tb0 == doctest::Approx(1.0));
  const auto [ta, tb] = bias_factors(1000000, 0.01, 1.0, 2.0);
  CHECK(ta == doctest::Approx(0.01));   // a*h limit
  CHECK(tb == doctest::Approx(0.02));   // b*h limit
}

TEST_CASE("bias factors: strictly decreasing, in (a h, 1]") {
  const double h = 0.05, a = 2.0;
  double prev = 2.0;
  // strict monotonicity holds until alpha^{k+1} underflows the double mantissa
  for (long k = 0; k <= 200; ++k) {
    const double ta = bias_factors(k, h, a, a).first;
    CHECK(ta <= 1.0);
    CHECK(ta > a * h);
    CHECK(ta < prev);
    prev = ta;
  }
  CHECK(bias_factors(0, h, a, a).first == 1.0);
}

TEST_CASE("bias factors: out-of-range parameters rejected") {
  CHECK_THROWS_AS(bias_factors(3, 1.0, 1.0, 1.0), ParamError);   // a h = 1
  CHECK_THROWS_AS(bias_factors(3, 0.5, 3.0, 1.0), ParamError);   // a h > 1
}

// Kernel asymptotics: |theta_k - h c_a(t_{k+1})| is O(h^2) uniformly over t in [delta, T]
// (halving h shrinks the sup about 4x), but only O(h) at the singular corner t ~ h,
// where theta_0 = 1 exactly while h c_a(h) = 1 + a h/2 + O(h^2).
TEST_CASE("bias factor kernel error: second order away from t = 0, first order at the corner") {
  const double a = 1.0, T = 2.0;
  HyperParams hp;
  hp.a = a;
  auto err = [&](double h, double t_lo) {
    double e = 0.0;
    const long K = static_cast<long>(T / h);
    for (long k = 0; k <= K; ++k) {
      const double t = (k + 1) * h;
      if (t < t_lo) continue;
      const double theta = bias_factors(k, h, a, a).first;
      e = std::max(e, std::abs(theta - h * bias_coefficient('a', t, hp)));
    }
    return e;
  };
  const double e1 = err(0.01, 0.1), e2 = err(0.005, 0.1), e3 = err(0.0025, 0.1);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.05));
  // pointwise at fixed t = 1 (k = 99 at h = 0.01) the same 4x law holds
  const double p1 = std::abs(bias_factors(99, 0.01, a, a).first - 0.01 * bias_coefficient('a', 1.0, hp));
  const double p2 = std::abs(bias_factors(199, 0.005, a, a).first - 0.005 * bias_coefficient('a', 1.0, hp));
  CHECK(p1 / p2 == doctest::Approx(4.0).epsilon(0.05));
  // including the corner the sup is h/2-dominated: ratio 2
  CHECK(err(0.01, 0.0) / err(0.005, 0.0) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(err(0.01, 0.0) == doctest::Approx(0.005).epsilon(0.01));
}

TEST_CASE("constant gradient, noiseless, z0 = 0 gives z_k = g for all k >= 1") {
  Eigen::VectorXd g(2);
  g << 1.5, -0.25;
  const auto obj = make_linear(g);
  HyperParams hp;
  DiscreteParams dp;
  dp.h = 0.02;
  dp.steps = 50;
  dp.noise_mode = NoiseMode::noiseless;
  dp.init = State(2);
  const auto trace = run_discrete(*obj, hp, dp);
  for (std::size_t k = 1; k < trace.states.size(); ++k) {
    CHECK(trace.states[k].z[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(trace.states[k].z[1] == doctest::Approx(-0.25).epsilon(1e-12));
  }
}

TEST_CASE("critical point with zero moments is a fixed point") {
  const auto obj = make_quadratic(2);  // grad f(0) = 0
  HyperParams hp;
  hp.sigma = 0.0;
  DiscreteParams dp;
  dp.h = 0.01;
  dp.steps = 30;
  dp.noise_mode = NoiseMode::noiseless;
  dp.init = State(2);
  const auto trace = run_discrete(*obj, hp, dp);
  const auto& end = trace.terminal();
  for (int i = 0; i < 2; ++i) {
    CHECK(end.x[i] == 0.0);
    CHECK(end.z[i] == 0.0);
    CHECK(end.y[i] == 0.0);
  }
}

// Scalar closure recursion with frozen x: y tracks g^2 + sigma^2 (brute-force iteration oracle).
TEST_CASE("closure-mode y relaxes to g^2 + sigma^2 when x is frozen") {
  Eigen::VectorXd g(1);
  g << 0.7;
  const auto obj = make_linear(g);
  HyperParams hp;
  hp.gamma = 1e-300;  // freeze x without touching the y-recursion
  hp.sigma = 1.3;
  DiscreteParams dp;
  dp.h = 0.01;
  dp.steps = 10000;
  dp.noise_mode = NoiseMode::closure;
  dp.init = State(1);
  const auto trace = run_discrete(*obj, hp, dp);
  CHECK(trace.terminal().y[0] == doctest::Approx(0.7 * 0.7 + 1.3 * 1.3).epsilon(1e-8));
}

TEST_CASE("closure mode keeps y nonnegative") {
  const auto obj = make_quad_cosine(1.0, 0.5, 2);
  HyperParams hp;
  DiscreteParams dp;
  dp.h = 0.05;
  dp.steps = 500;
  dp.noise_mode = NoiseMode::closure;
  dp.init = State({{1.0, -2.0}, {0.5, 0.5}, {0.0, 3.0}});
  dp.seed = 9;
  const auto trace = run_discrete(*obj, hp, dp);
  for (const auto& s : trace.states) CHECK(s.y_nonnegative());
}

TEST_CASE("K = 0 returns the initial state; same seed is bit-identical") {
  const auto obj = make_quadratic(1);
  HyperParams hp;
  DiscreteParams dp;
  dp.h = 0.01;
  dp.steps = 0;
  dp.init = State({{2.0}, {0.1}, {1.0}});
  const auto t0 = run_discrete(*obj, hp, dp);
  CHECK(t0.states.size() == 1);
  CHECK(t0.terminal().x[0] == 2.0);

  dp.steps = 200;
  dp.seed = 123;
  const auto a = run_discrete(*obj, hp, dp);
  const auto b = run_discrete(*obj, hp, dp);
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(a.states[k].x[0] == b.states[k].x[0]);
    CHECK(a.states[k].z[0] == b.states[k].z[0]);
    CHECK(a.states[k].y[0] == b.states[k].y[0]);
  }
}

TEST_CASE("divergence raises an error carrying the step index") {
  const auto obj = make_quadratic(1, 1.0);
  HyperParams hp;
  hp.gamma = 1e300;  // eta large enough that x^2 overflows within a few steps
  hp.sigma = 0.0;
  DiscreteParams dp;
  dp.h = 0.5;
  dp.steps = 20;
  dp.noise_mode = NoiseMode::noiseless;
  dp.init = State({{1.0}, {0.0}, {0.0}});
  try {
    run_discrete(*obj, hp, dp);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.step >= 0);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("cadlag interpolation is right-continuous and piecewise constant") {
  const auto obj = make_quadratic(1);
  HyperParams hp;
  DiscreteParams dp;
  dp.h = 0.1;
  dp.steps = 5;
  dp.seed = 4;
  dp.init = State({{1.0}, {0.0}, {0.5}});
  const auto trace = run_discrete(*obj, hp, dp);
  CHECK(trace.at_time(0.0).x[0] == trace.states[0].x[0]);
  CHECK(trace.at_time(0.0999).x[0] == trace.states[0].x[0]);
  CHECK(trace.at_time(0.1).x[0] == trace.states[1].x[0]);  // jumps at t_k
  CHECK(trace.at_time(0.35).x[0] == trace.states[3].x[0]);
}

// Scaling consistency: doubling gamma and halving h keeps eta = gamma h fixed, so the
// recursion changes only through the h-dependence of the theta factors. At a fixed step
// count the step-indexed traces therefore converge to each other as h -> 0 (theta_k ->
// 1/(k+1) independently of h).
TEST_CASE("eta-invariant rescaling: step-indexed traces converge as h -> 0") {
  const auto obj = make_quad_cosine(1.0, 0.5, 1);
  const long K = 100;
  auto run = [&](double h, double gamma) {
    HyperParams hp;
    hp.gamma = gamma;
    hp.sigma = 0.0;
    DiscreteParams dp;
    dp.h = h;
    dp.steps = K;
    dp.noise_mode = NoiseMode::noiseless;
    dp.init = State({{2.0}, {0.0}, {1.0}});
    return run_discrete(*obj, hp, dp);
  };
  auto max_gap = [&](double h) {
    const auto base = run(h, 1.0);
    const auto rescaled = run(h / 2.0, 2.0);  // same eta, same step count
    double d = 0.0;
    for (long k = 0; k <= K; ++k)
      d = std::max({d, std::abs(base.states[k].x[0] - rescaled.states[k].x[0]),
                    std::abs(base.states[k].z[0] - rescaled.states[k].z[0]),
                    std::abs(base.states[k].y[0] - rescaled.states[k].y[0])});
    return d;
  };
  const double d1 = max_gap(0.04);
  const double d2 = max_gap(0.01);
  const double d3 = max_gap(0.0025);
  CHECK(d2 < d1);
  CHECK(d3 < d2);
  CHECK(d3 < 0.5 * d1);
}

TEST_CASE("ensemble terminal measure is deterministic and worker-count invariant") {
  const auto obj = make_quadratic(1);
  HyperParams hp;
  DiscreteParams dp;
  dp.h = 0.02;
  dp.steps = 100;
  dp.seed = 31;
  dp.init = State({{1.0}, {0.0}, {0.5}});
  const auto e1 = run_discrete_ensemble(*obj, hp, dp, 64, 1);
  const auto e2 = run_discrete_ensemble(*obj, hp, dp, 64, 4);
  for (std::size_t i = 0; i < e1.samples.size(); ++i) CHECK(e1.samples[i] == e2.samples[i]);
}

TEST_SUITE_END();
