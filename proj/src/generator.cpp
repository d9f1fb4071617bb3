#include "adamlab/generator.hpp"

#include <cmath>

#include "adamlab/stats.hpp"

namespace adamlab {

namespace {

constexpr double kFdScale = 1e-5;

double coord(const State& s, int idx) {
  const int m = s.dim();
  if (idx < m) return s.x[idx];
  if (idx < 2 * m) return s.z[idx - m];
  return s.y[idx - 2 * m];
}

double& coord_ref(State& s, int idx) {
  const int m = s.dim();
  if (idx < m) return s.x[idx];
  if (idx < 2 * m) return s.z[idx - m];
  return s.y[idx - 2 * m];
}

void fd_gradient(const TestFunction& phi, const State& s, Vec& out) {
  State u = s;
  const int d = 3 * s.dim();
  out.assign(d, 0.0);
  for (int i = 0; i < d; ++i) {
    const double v0 = coord(s, i);
    const double h = kFdScale * (1.0 + std::abs(v0));
    coord_ref(u, i) = v0 + h;
    const double fp = phi.value(u);
    coord_ref(u, i) = v0 - h;
    const double fm = phi.value(u);
    coord_ref(u, i) = v0;
    out[i] = (fp - fm) / (2.0 * h);
  }
}

void fd_second_diagonal(const TestFunction& phi, const State& s, Vec& out) {
  State u = s;
  const int d = 3 * s.dim();
  out.assign(d, 0.0);
  const double f0 = phi.value(s);
  for (int i = 0; i < d; ++i) {
    const double v0 = coord(s, i);
    const double h = kFdScale * (1.0 + std::abs(v0));
    coord_ref(u, i) = v0 + h;
    const double fp = phi.value(u);
    coord_ref(u, i) = v0 - h;
    const double fm = phi.value(u);
    coord_ref(u, i) = v0;
    out[i] = (fp - 2.0 * f0 + fm) / (h * h);
  }
}

}  // namespace

double apply_generator(const TestFunction& phi, const State& s, const Objective& obj, const HyperParams& hp,
                       double eps_reg) {
  const int m = s.dim();
  if (eps_reg < 0.0) throw std::invalid_argument("apply_generator: eps_reg >= 0 required");
  if (eps_reg == 0.0) {
    for (double yi : s.y)
      if (!(yi > 0.0)) throw std::domain_error("apply_generator: y > 0 required when eps_reg = 0");
  }

  Vec grad, diag2;
  if (phi.gradient)
    phi.gradient(s, grad);
  else
    fd_gradient(phi, s, grad);
  if (phi.second_diagonal)
    phi.second_diagonal(s, diag2);
  else
    fd_second_diagonal(phi, s, diag2);

  Vec g(m);
  obj.gradient(s.x, g);

  double out = 0.0;
  for (int i = 0; i < m; ++i) {
    const double w = 1.0 / (std::sqrt(std::abs(s.y[i])) + hp.eps);
    out += -hp.gamma * s.z[i] * w * grad[i];
    out += hp.a * (g[i] - s.z[i]) * grad[m + i];
    out += hp.b * (-s.y[i] + sq(g[i]) + sq(hp.sigma)) * grad[2 * m + i];
    out += 0.5 * sq(hp.a) * sq(hp.sigma) * diag2[m + i];
  }
  if (eps_reg > 0.0)
    for (int i = 0; i < m; ++i) out += eps_reg * (diag2[i] + diag2[2 * m + i]);
  return out;
}

std::vector<ResidualEntry> stationarity_residual(std::span<const TestFunction> phis, const EmpiricalMeasure& ens,
                                                 const Objective& obj, const HyperParams& hp, int workers) {
  if (phis.empty()) throw std::invalid_argument("stationarity_residual: empty phi set");
  ens.validate();

  std::vector<ResidualEntry> out(phis.size());
  Vec values(static_cast<std::size_t>(ens.n));
  for (std::size_t p = 0; p < phis.size(); ++p) {
    parallel_for(ens.n, workers, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t i = lo; i < hi; ++i) values[i] = apply_generator(phis[p], ens.state(static_cast<int>(i)), obj, hp);
    });
    const MeanVar mv = mean_var(values);
    out[p] = {phis[p].name, mv.mean, mv.std_error(), mv.n};
  }
  return out;
}

TestFunction phi_coordinate(char block, int j) {
  const int off = block == 'x' ? 0 : block == 'z' ? 1 : 2;
  TestFunction phi;
  phi.name = std::string(1, block) + "_" + std::to_string(j + 1);
  phi.value = [off, j](const State& s) { return off == 0 ? s.x[j] : off == 1 ? s.z[j] : s.y[j]; };
  phi.gradient = [off, j](const State& s, Vec& g) {
    g.assign(3 * s.dim(), 0.0);
    g[off * s.dim() + j] = 1.0;
  };
  phi.second_diagonal = [](const State& s, Vec& d) { d.assign(3 * s.dim(), 0.0); };
  return phi;
}

TestFunction phi_z_squared(int j) {
  TestFunction phi;
  phi.name = "z_" + std::to_string(j + 1) + "^2";
  phi.value = [j](const State& s) { return sq(s.z[j]); };
  phi.gradient = [j](const State& s, Vec& g) {
    g.assign(3 * s.dim(), 0.0);
    g[s.dim() + j] = 2.0 * s.z[j];
  };
  phi.second_diagonal = [j](const State& s, Vec& d) {
    d.assign(3 * s.dim(), 0.0);
    d[s.dim() + j] = 2.0;
  };
  return phi;
}

TestFunction phi_xz(int j) {
  TestFunction phi;
  phi.name = "x_" + std::to_string(j + 1) + "*z_" + std::to_string(j + 1);
  phi.value = [j](const State& s) { return s.x[j] * s.z[j]; };
  phi.gradient = [j](const State& s, Vec& g) {
    g.assign(3 * s.dim(), 0.0);
    g[j] = s.z[j];
    g[s.dim() + j] = s.x[j];
  };
  phi.second_diagonal = [](const State& s, Vec& d) { d.assign(3 * s.dim(), 0.0); };
  return phi;
}

std::vector<TestFunction> standard_phi_set(int m) {
  std::vector<TestFunction> phis;
  for (int j = 0; j < m; ++j) {
    phis.push_back(phi_coordinate('z', j));
    phis.push_back(phi_z_squared(j));
    phis.push_back(phi_coordinate('y', j));
    phis.push_back(phi_xz(j));
  }
  return phis;
}

}  // namespace adamlab
