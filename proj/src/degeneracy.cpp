#include "adamlab/degeneracy.hpp"

#include <cmath>

#include "adamlab/rng.hpp"

namespace adamlab {

Eigen::MatrixXd matrix_A(std::span<const double> x, const Objective& obj) {
  const int m = obj.dim();
  Vec g(m);
  obj.gradient(x, g);
  Eigen::MatrixXd h;
  obj.hessian(x, h);
  for (int i = 0; i < m; ++i) h.row(i) *= g[i];
  return h;
}

DegeneracyReport classify(std::span<const double> x, const Objective& obj, double tol_row, double tol_det) {
  if (!(tol_row > 0.0 && tol_det > 0.0)) throw std::invalid_argument("classify: tolerances must be > 0");
  DegeneracyReport rep;
  rep.x.assign(x.begin(), x.end());
  rep.A = matrix_A(x, obj);
  rep.tol_row = tol_row;
  rep.tol_det = tol_det;
  const int m = obj.dim();
  const double fro = rep.A.norm();
  rep.min_row_norm = rep.A.rowwise().norm().minCoeff();
  rep.abs_det = std::abs(rep.A.determinant());
  if (rep.min_row_norm <= tol_row * (1.0 + fro)) {
    rep.cls = DegenClass::row_degenerate;
  } else if (rep.abs_det <= tol_det * std::pow(1.0 + fro, m)) {
    rep.cls = DegenClass::rank_degenerate;
  } else {
    rep.cls = DegenClass::regular;
  }
  return rep;
}

VectorField drift_field(ObjectivePtr obj, const HyperParams& hp) {
  return [obj, hp](const State& s, Vec& out) {
    const int m = s.dim();
    out.assign(3 * m, 0.0);
    Vec g(m);
    obj->gradient(s.x, g);
    for (int i = 0; i < m; ++i) {
      out[i] = -hp.gamma * s.z[i] / (std::sqrt(s.y[i]) + hp.eps);
      out[m + i] = hp.a * (g[i] - s.z[i]);
      out[2 * m + i] = hp.b * (-s.y[i] + sq(g[i]) + sq(hp.sigma));
    }
  };
}

VectorField diffusion_field(int i, int m, const HyperParams& hp) {
  return [i, m, hp](const State&, Vec& out) {
    out.assign(3 * m, 0.0);
    out[m + i] = hp.a * hp.sigma;
  };
}

void lie_bracket_closed_form(int order, int i, const State& s, const Objective& obj, const HyperParams& hp, Vec& out) {
  const int m = s.dim();
  out.assign(3 * m, 0.0);
  for (double yi : s.y)
    if (!(yi > 0.0)) throw std::domain_error("lie_bracket_closed_form: y > 0 required");

  const double gamma_i = hp.gamma * hp.a * hp.sigma / (std::sqrt(s.y[i]) + hp.eps);  // Gamma_i(y)
  const double big_b = sq(hp.a) * hp.sigma;                                          // B = a^2 sigma

  if (order == 1) {
    // [X_i, X_0] = Gamma_i(y) d_{x_i} + a^2 sigma d_{z_i}
    out[i] = gamma_i;
    out[m + i] = big_b;
    return;
  }
  if (order != 2) throw std::invalid_argument("lie_bracket_closed_form: order must be 1 or 2");

  Vec g(m);
  obj.gradient(s.x, g);
  Eigen::MatrixXd h;
  obj.hessian(s.x, h);

  const double sqrt_yi = std::sqrt(s.y[i]);
  const double gamma_prime = -hp.gamma * hp.a * hp.sigma / (2.0 * sqrt_yi * sq(sqrt_yi + hp.eps));
  const double g_i = sq(g[i]) + sq(hp.sigma);

  out[i] = -big_b * hp.gamma / (sqrt_yi + hp.eps) - hp.b * (-s.y[i] + g_i) * gamma_prime;
  for (int j = 0; j < m; ++j) {
    out[m + j] = hp.a * gamma_i * h(j, i) - hp.a * big_b * (i == j ? 1.0 : 0.0);
    out[2 * m + j] = 2.0 * hp.b * gamma_i * g[j] * h(j, i);
  }
}

VectorField bracket_field(int order, int i, ObjectivePtr obj, const HyperParams& hp) {
  return [order, i, obj, hp](const State& s, Vec& out) { lie_bracket_closed_form(order, i, s, *obj, hp, out); };
}

void numeric_commutator(const VectorField& V, const VectorField& W, const State& s, Vec& out, double fd_step) {
  const int m = s.dim();
  const int d = 3 * m;
  Vec v0(d), w0(d), fp(d), fm(d);
  V(s, v0);
  W(s, w0);
  out.assign(d, 0.0);

  auto coord = [&](State& u, int idx) -> double& {
    if (idx < m) return u.x[idx];
    if (idx < 2 * m) return u.z[idx - m];
    return u.y[idx - 2 * m];
  };

  State u = s;
  // DW . V  -  DV . W, one directional column at a time
  for (int j = 0; j < d; ++j) {
    double& slot = coord(u, j);
    const double base = slot;
    const double h = fd_step * (1.0 + std::abs(base));

    slot = base + h;
    W(u, fp);
    slot = base - h;
    W(u, fm);
    for (int r = 0; r < d; ++r) out[r] += (fp[r] - fm[r]) / (2.0 * h) * v0[j];

    slot = base + h;
    V(u, fp);
    slot = base - h;
    V(u, fm);
    for (int r = 0; r < d; ++r) out[r] -= (fp[r] - fm[r]) / (2.0 * h) * w0[j];

    slot = base;
  }
}

namespace {

double abs_det_at(const Objective& obj, const Vec& x) { return std::abs(matrix_A(x, obj).determinant()); }

// deterministic grid over the cube circumscribing B(center, radius), restricted to the ball
double ball_grid_min(const Objective& obj, const Vec& center, double radius, int per_dim) {
  const int m = static_cast<int>(center.size());
  Vec x(m);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(m, 0);
  while (true) {
    double r2 = 0.0;
    for (int i = 0; i < m; ++i) {
      x[i] = center[i] - radius + 2.0 * radius * idx[i] / (per_dim - 1);
      r2 += sq(x[i] - center[i]);
    }
    if (r2 <= sq(radius) * (1.0 + 1e-12)) best = std::min(best, abs_det_at(obj, x));
    int carry = 0;
    while (carry < m && ++idx[carry] == per_dim) idx[carry++] = 0;
    if (carry == m) break;
  }
  return best;
}

}  // namespace

RegularPointCertificate find_regular_point(const Objective& obj, double box_radius, int n_tries, double margin,
                                           std::uint64_t seed) {
  if (n_tries < 1) throw std::invalid_argument("find_regular_point: n_tries >= 1 required");
  const int m = obj.dim();
  SequentialRng rng(seed, 0x4e60u);

  Vec best(m, 0.0);
  double best_det = -1.0;
  for (int t = 0; t < n_tries; ++t) {
    Vec x(m);
    for (int i = 0; i < m; ++i) x[i] = rng.uniform(-box_radius, box_radius);
    const double d = abs_det_at(obj, x);
    if (d > best_det) {
      best_det = d;
      best = x;
    }
  }

  // coordinate-wise golden-section polish (derivative-free)
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < 4; ++sweep) {
    for (int i = 0; i < m; ++i) {
      double lo = std::max(-box_radius, best[i] - 0.5 * box_radius);
      double hi = std::min(box_radius, best[i] + 0.5 * box_radius);
      Vec x = best;
      for (int it = 0; it < 60; ++it) {
        const double c = hi - gr * (hi - lo);
        const double d = lo + gr * (hi - lo);
        x[i] = c;
        const double fc = abs_det_at(obj, x);
        x[i] = d;
        const double fd = abs_det_at(obj, x);
        if (fc > fd)
          hi = d;
        else
          lo = c;
      }
      x[i] = 0.5 * (lo + hi);
      if (abs_det_at(obj, x) > best_det) {
        best_det = abs_det_at(obj, x);
        best[i] = x[i];
      }
    }
  }

  if (best_det < margin)
    throw SearchError("find_regular_point: no point with |det A| >= margin in box of radius " +
                      std::to_string(box_radius) + " after " + std::to_string(n_tries) + " tries");

  // largest dyadic radius whose 2r-ball grid clears the margin
  RegularPointCertificate cert;
  cert.x_star = best;
  cert.margin = margin;
  cert.grid_per_dim = 9;
  double r = 0.25 * box_radius;
  while (r > 1e-6 * box_radius) {
    const double gmin = ball_grid_min(obj, best, 2.0 * r, cert.grid_per_dim);
    if (gmin >= margin) {
      cert.radius = r;
      cert.grid_min = gmin;
      return cert;
    }
    r *= 0.5;
  }
  throw SearchError("find_regular_point: found a candidate but no certifiable ball radius");
}

double certificate_grid_min(const RegularPointCertificate& cert, const Objective& obj, int per_dim) {
  return ball_grid_min(obj, cert.x_star, 2.0 * cert.radius, per_dim);
}

}  // namespace adamlab
