#include <cmath>

#include "adamlab/generator.hpp"
#include "adamlab/lyapunov.hpp"
#include "adamlab/rng.hpp"
#include "adamlab/sde.hpp"
#include "doctest.h"

using namespace adamlab;

TEST_SUITE_BEGIN("generator");

namespace {

State random_state(SequentialRng& rng, int m, double y_lo = 0.2, double y_hi = 3.0) {
  State s(m);
  for (int i = 0; i < m; ++i) {
    s.x[i] = rng.uniform(-2.0, 2.0);
    s.z[i] = rng.uniform(-2.0, 2.0);
    s.y[i] = rng.uniform(y_lo, y_hi);
  }
  return s;
}

}  // namespace

TEST_CASE("constant phi maps to zero") {
  const auto obj = make_quadratic(2);
  HyperParams hp;
  TestFunction phi;
  phi.name = "const";
  phi.value = [](const State&) { return 3.25; };
  const State s({{1.0, 0.5}, {0.2, -0.1}, {1.0, 2.0}});
  CHECK(std::abs(apply_generator(phi, s, *obj, hp)) < 1e-9);
}

TEST_CASE("coordinate test functions reproduce the drift components") {
  const auto obj = make_quad_cosine(1.0, 0.5, 2);
  HyperParams hp;
  hp.a = 1.3;
  hp.b = 0.7;
  SequentialRng rng(21, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const State s = random_state(rng, 2);
    Vec g(2);
    obj->gradient(s.x, g);
    for (int j = 0; j < 2; ++j) {
      // L z_j = a (d_j f - z_j)
      CHECK(apply_generator(phi_coordinate('z', j), s, *obj, hp) ==
            doctest::Approx(hp.a * (g[j] - s.z[j])).epsilon(1e-10));
      // L y_j = b (-y_j + (d_j f)^2 + sigma^2)
      CHECK(apply_generator(phi_coordinate('y', j), s, *obj, hp) ==
            doctest::Approx(hp.b * (-s.y[j] + sq(g[j]) + sq(hp.sigma))).epsilon(1e-10));
      // L x_j = -gamma z_j / (sqrt(y_j) + eps)
      CHECK(apply_generator(phi_coordinate('x', j), s, *obj, hp) ==
            doctest::Approx(-hp.gamma * s.z[j] / (std::sqrt(s.y[j]) + hp.eps)).epsilon(1e-10));
    }
  }
}

TEST_CASE("diffusion term shows up in second moments of z") {
  const auto obj = make_constant(0.0, 1);
  HyperParams hp;
  const State s({{0.0}, {0.5}, {1.0}});
  // L z^2 = 2 z * a(0 - z) + a^2 sigma^2
  CHECK(apply_generator(phi_z_squared(0), s, *obj, hp) ==
        doctest::Approx(-2.0 * hp.a * sq(0.5) + sq(hp.a) * sq(hp.sigma)).epsilon(1e-10));
}

TEST_CASE("generator is linear in phi") {
  const auto obj = make_quadratic(2);
  HyperParams hp;
  SequentialRng rng(5, 0);
  const State s = random_state(rng, 2);
  const auto pa = phi_z_squared(0);
  const auto pb = phi_xz(1);
  for (int trial = 0; trial < 5; ++trial) {
    const double ca = rng.uniform(-2.0, 2.0), cb = rng.uniform(-2.0, 2.0);
    TestFunction combo;
    combo.name = "combo";
    combo.value = [&, ca, cb](const State& u) { return ca * pa.value(u) + cb * pb.value(u); };
    combo.gradient = [&, ca, cb](const State& u, Vec& g) {
      Vec ga, gb;
      pa.gradient(u, ga);
      pb.gradient(u, gb);
      g.resize(ga.size());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = ca * ga[i] + cb * gb[i];
    };
    combo.second_diagonal = [&, ca, cb](const State& u, Vec& d) {
      Vec da, db;
      pa.second_diagonal(u, da);
      pb.second_diagonal(u, db);
      d.resize(da.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = ca * da[i] + cb * db[i];
    };
    const double lhs = apply_generator(combo, s, *obj, hp);
    const double rhs = ca * apply_generator(pa, s, *obj, hp) + cb * apply_generator(pb, s, *obj, hp);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("finite-difference fallback agrees with analytic hooks") {
  const auto obj = make_quad_cosine(1.0, 0.5, 2);
  HyperParams hp;
  SequentialRng rng(31, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const State s = random_state(rng, 2, 0.5, 2.5);
    for (const auto& phi : {phi_z_squared(0), phi_xz(1), phi_coordinate('y', 0)}) {
      TestFunction value_only;
      value_only.name = phi.name;
      value_only.value = phi.value;
      const double fd = apply_generator(value_only, s, *obj, hp);
      const double an = apply_generator(phi, s, *obj, hp);
      CHECK(fd == doctest::Approx(an).epsilon(1e-5));
    }
  }
}

TEST_CASE("y <= 0 is a domain error without regularization, allowed with it") {
  const auto obj = make_quadratic(1);
  HyperParams hp;
  const State s({{1.0}, {1.0}, {-0.5}});
  CHECK_THROWS_AS(apply_generator(phi_coordinate('z', 0), s, *obj, hp, 0.0), std::domain_error);
  CHECK_NOTHROW(apply_generator(phi_coordinate('z', 0), s, *obj, hp, 0.1));
}

TEST_CASE("stationarity residual rejects a point mass off equilibrium and accepts OU at equilibrium") {
  Eigen::VectorXd g(1);
  g << 1.0;
  const auto obj = make_linear(g);
  HyperParams hp;

  // all mass at a non-fixed point: residual of phi = y_1 is significantly nonzero
  EmpiricalMeasure off(256, 1);
  for (int i = 0; i < off.n; ++i) off.set_row(i, State({{0.0}, {0.0}, {9.0}}));
  const auto bad = stationarity_residual(std::vector<TestFunction>{phi_coordinate('y', 0)}, off, *obj, hp);
  CHECK(std::abs(bad[0].mean) > 3.0 * (bad[0].std_error + 1e-12));

  // long-run ensemble: z residuals within 3 SE
  SdeConfig cfg;
  cfg.dt = 0.01;
  cfg.horizon = 25.0;
  cfg.seed = 77;
  const double checkpoints[] = {25.0};
  const auto ens = simulate_ensemble(cfg, *obj, hp, point_init(State({{0.0}, {1.0}, {2.0}})), 20000, checkpoints, 0);
  const auto res = stationarity_residual(std::vector<TestFunction>{phi_coordinate('z', 0), phi_coordinate('y', 0)},
                                         ens[0], *obj, hp);
  for (const auto& r : res) CHECK(r.stationary());
}

TEST_CASE("quadratic long-run ensemble passes the standard phi set") {
  const auto obj = make_quadratic(1);
  HyperParams hp;
  SdeConfig cfg;
  cfg.dt = 0.01;
  cfg.horizon = 50.0;
  cfg.seed = 3;
  const double checkpoints[] = {50.0};
  const auto ens = simulate_ensemble(cfg, *obj, hp, point_init(State({{1.0}, {0.0}, {1.0}})), 20000, checkpoints, 0);
  const auto res = stationarity_residual(standard_phi_set(1), ens[0], *obj, hp);
  for (const auto& r : res) {
    INFO(r.phi, " mean=", r.mean, " se=", r.std_error);
    CHECK(std::abs(r.mean) <= 3.0 * r.std_error);
  }
}

TEST_SUITE_END();
