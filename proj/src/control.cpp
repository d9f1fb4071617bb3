#include "adamlab/control.hpp"

#include <algorithm>
#include <cmath>

namespace adamlab {

namespace {

// cubic Hermite basis on [0,1]
double h00(double s) { return 2 * s * s * s - 3 * s * s + 1; }
double h10(double s) { return s * s * s - 2 * s * s + s; }
double h01(double s) { return -2 * s * s * s + 3 * s * s; }
double h11(double s) { return s * s * s - s * s; }
double dh00(double s) { return 6 * s * s - 6 * s; }
double dh10(double s) { return 3 * s * s - 4 * s + 1; }
double dh01(double s) { return -6 * s * s + 6 * s; }
double dh11(double s) { return 3 * s * s - 2 * s; }
double ddh00(double s) { return 12 * s - 6; }
double ddh10(double s) { return 6 * s - 4; }
double ddh01(double s) { return -12 * s + 6; }
double ddh11(double s) { return 6 * s - 2; }

// interior bump psi(r) = r^3 (1-r)^3 on (0,1); int_0^1 psi = 1/140
double psi(double r) { return r * r * r * (1 - r) * (1 - r) * (1 - r); }
double dpsi(double r) { return 3 * r * r * (1 - r) * (1 - r) * (1 - 2 * r); }
double ddpsi(double r) {
  const double u = r * (1 - r);
  return 6 * u * (1 - 2 * r) * (1 - 2 * r) - 6 * u * u;
}
constexpr double kPsiIntegral = 1.0 / 140.0;

Vec grad_sq_plus_sigma(const Objective& obj, const Vec& x, double sigma) {
  Vec g(x.size());
  obj.gradient(x, g);
  for (auto& t : g) t = sq(t) + sq(sigma);
  return g;
}

// one RK4 step of yd = b(-y + g(x(t)) + sigma^2) along a prescribed path x(t)
template <class PathFn>
void rk4_y_step(Vec& y, double t, double dt, double b, double sigma, const Objective& obj, const PathFn& x_at,
                Vec& k1, Vec& k2, Vec& k3, Vec& k4, Vec& xbuf, Vec& gbuf, Vec& ytmp) {
  const int m = static_cast<int>(y.size());
  auto eval = [&](double tt, const Vec& yy, Vec& out) {
    x_at(tt, xbuf);
    obj.gradient(xbuf, gbuf);
    for (int i = 0; i < m; ++i) out[i] = b * (-yy[i] + sq(gbuf[i]) + sq(sigma));
  };
  eval(t, y, k1);
  for (int i = 0; i < m; ++i) ytmp[i] = y[i] + 0.5 * dt * k1[i];
  eval(t + 0.5 * dt, ytmp, k2);
  for (int i = 0; i < m; ++i) ytmp[i] = y[i] + 0.5 * dt * k2[i];
  eval(t + 0.5 * dt, ytmp, k3);
  for (int i = 0; i < m; ++i) ytmp[i] = y[i] + dt * k3[i];
  eval(t + dt, ytmp, k4);
  for (int i = 0; i < m; ++i) y[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
}

// Build a leg from a twice-differentiable path x(t): integrates y, recovers z from
// z = -(sqrt(y)+eps) xd / gamma and the control from h = (zd - a(grad f - z))/(a sigma).
struct PathSpec {
  std::function<void(double, Vec&)> x;    // x(t)
  std::function<void(double, Vec&)> xd;   // dx/dt
  std::function<void(double, Vec&)> xdd;  // d2x/dt2
};

StageLeg build_leg(const PathSpec& path, const Vec& y_init, double t_lo, double t_hi, const Objective& obj,
                   const HyperParams& hp, double dt) {
  if (hp.sigma == 0.0) throw ControlError("leg", "control undefined for sigma = 0 (division by a*sigma)");
  const int m = static_cast<int>(y_init.size());
  // control nodes at dt/2 so that an RK4 replay at dt queries exact samples only
  long n = 2 * std::max<long>(1, static_cast<long>(std::llround((t_hi - t_lo) / dt)));

  StageLeg leg;
  leg.times.resize(n + 1);
  leg.states.resize(n + 1, State(m));
  const double step = (t_hi - t_lo) / static_cast<double>(n);

  Vec y = y_init;
  Vec k1(m), k2(m), k3(m), k4(m), xbuf(m), gbuf(m), ytmp(m);
  Vec xd(m), xdd(m), z(m), zd(m), h(m);
  for (long j = 0; j <= n; ++j) {
    const double t = t_lo + j * step;
    leg.times[j] = t;
    path.x(t, xbuf);
    path.xd(t, xd);
    path.xdd(t, xdd);
    obj.gradient(xbuf, gbuf);

    // y along the path; the ODE gives yd directly for the z-derivative below
    Vec yd(m);
    for (int i = 0; i < m; ++i) yd[i] = hp.b * (-y[i] + sq(gbuf[i]) + sq(hp.sigma));
    for (int i = 0; i < m; ++i) {
      const double sy = std::sqrt(y[i]);
      z[i] = -(sy + hp.eps) * xd[i] / hp.gamma;
      zd[i] = -(yd[i] / (2.0 * sy) * xd[i] + (sy + hp.eps) * xdd[i]) / hp.gamma;
      h[i] = (zd[i] - hp.a * (gbuf[i] - z[i])) / (hp.a * hp.sigma);
    }
    leg.states[j].x = xbuf;
    leg.states[j].z = z;
    leg.states[j].y = y;
    leg.control.append(t, h);

    if (j < n) rk4_y_step(y, t, step, hp.b, hp.sigma, obj, path.x, k1, k2, k3, k4, xbuf, gbuf, ytmp);
  }
  return leg;
}

double max_dist_from(const StageLeg& leg, const Vec& ref) {
  double d = 0.0;
  for (const auto& s : leg.states) {
    double r = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) r += sq(s.x[i] - ref[i]);
    d = std::max(d, std::sqrt(r));
  }
  return d;
}

}  // namespace

void SkeletonControl::append(double t, Vec v) {
  if (!times.empty()) {
    if (std::abs(t - times.back()) < 1e-12) {
      t = times.back();  // jump node: keep both samples at the identical time
    } else if (t < times.back()) {
      throw std::invalid_argument("SkeletonControl: times must be nondecreasing");
    }
  }
  times.push_back(t);
  values.push_back(std::move(v));
}

Vec SkeletonControl::at(double t) const {
  if (times.empty()) throw std::invalid_argument("SkeletonControl: empty");
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - times.begin());
  const double t0 = times[j - 1], t1 = times[j];
  if (t1 == t0) return values[j];  // right-continuous at a jump
  const double w = (t - t0) / (t1 - t0);
  Vec out(values[j - 1].size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * values[j - 1][i] + w * values[j][i];
  return out;
}

std::vector<std::size_t> SkeletonControl::segment_starts() const {
  std::vector<std::size_t> starts = {0};
  for (std::size_t j = 1; j < times.size(); ++j)
    if (times[j] == times[j - 1]) starts.push_back(j);
  return starts;
}

void skeleton_rhs(const State& s, std::span<const double> h_ctrl, const Objective& obj, const HyperParams& hp,
                  Drift& out) {
  const int m = s.dim();
  for (double yi : s.y)
    if (!(yi > 0.0)) throw std::domain_error("skeleton_rhs: y > 0 required");
  drift(SystemKind::homogeneous, 0.0, s, obj, hp, out);
  for (int i = 0; i < m; ++i) out.dz[i] += hp.a * hp.sigma * h_ctrl[i];
}

Trajectory integrate_skeleton(const State& init, const SkeletonControl& control, const Objective& obj,
                              const HyperParams& hp, double dt, bool keep_path) {
  const int m = init.dim();

  Trajectory traj;
  traj.times.push_back(control.t_begin());
  traj.states.push_back(init);

  State s = init;
  State u2(m), u3(m), u4(m);
  Drift k1, k2, k3, k4;

  // integrate each smooth segment separately so control jumps never fall inside a step
  const auto starts = control.segment_starts();
  for (std::size_t seg = 0; seg < starts.size(); ++seg) {
    const std::size_t lo = starts[seg];
    const std::size_t hi = (seg + 1 < starts.size() ? starts[seg + 1] : control.times.size()) - 1;
    const double seg_t0 = control.times[lo], seg_t1 = control.times[hi];
    if (seg_t1 <= seg_t0) continue;

    // piecewise-linear interpolation local to the segment
    auto ctrl_at = [&](double t) {
      const auto it = std::upper_bound(control.times.begin() + lo, control.times.begin() + hi, t);
      const std::size_t j = static_cast<std::size_t>(it - control.times.begin());
      if (j <= lo) return control.values[lo];
      const double ta = control.times[j - 1], tb = control.times[j];
      if (tb == ta) return control.values[j - 1];
      const double w = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
      Vec out(m);
      for (int i = 0; i < m; ++i) out[i] = (1.0 - w) * control.values[j - 1][i] + w * control.values[j][i];
      return out;
    };
    auto rhs = [&](const State& u, double t, Drift& out) { skeleton_rhs(u, ctrl_at(t), obj, hp, out); };

    const long n = std::max<long>(1, static_cast<long>(std::llround((seg_t1 - seg_t0) / dt)));
    const double step = (seg_t1 - seg_t0) / static_cast<double>(n);
    for (long j = 0; j < n; ++j) {
      const double t = seg_t0 + j * step;
      rhs(s, t, k1);
      for (int i = 0; i < m; ++i) {
        u2.x[i] = s.x[i] + 0.5 * step * k1.dx[i];
        u2.z[i] = s.z[i] + 0.5 * step * k1.dz[i];
        u2.y[i] = s.y[i] + 0.5 * step * k1.dy[i];
      }
      rhs(u2, t + 0.5 * step, k2);
      for (int i = 0; i < m; ++i) {
        u3.x[i] = s.x[i] + 0.5 * step * k2.dx[i];
        u3.z[i] = s.z[i] + 0.5 * step * k2.dz[i];
        u3.y[i] = s.y[i] + 0.5 * step * k2.dy[i];
      }
      rhs(u3, t + 0.5 * step, k3);
      for (int i = 0; i < m; ++i) {
        u4.x[i] = s.x[i] + step * k3.dx[i];
        u4.z[i] = s.z[i] + step * k3.dz[i];
        u4.y[i] = s.y[i] + step * k3.dy[i];
      }
      rhs(u4, t + step, k4);
      for (int i = 0; i < m; ++i) {
        s.x[i] += step / 6.0 * (k1.dx[i] + 2 * k2.dx[i] + 2 * k3.dx[i] + k4.dx[i]);
        s.z[i] += step / 6.0 * (k1.dz[i] + 2 * k2.dz[i] + 2 * k3.dz[i] + k4.dz[i]);
        s.y[i] += step / 6.0 * (k1.dy[i] + 2 * k2.dy[i] + 2 * k3.dy[i] + k4.dy[i]);
      }
      if (!s.finite()) throw DivergenceError("integrate_skeleton: blow-up", j, t + step);
      if (keep_path || (j == n - 1 && seg + 1 == starts.size())) {
        traj.times.push_back(t + step);
        traj.states.push_back(s);
      }
    }
  }
  if (traj.states.size() == 1) {
    traj.times.push_back(control.t_end());
    traj.states.push_back(s);
  }
  return traj;
}

StageLeg stage1_initial_leg(const State& u0, const Vec& x_target, double t1, const Objective& obj,
                            const HyperParams& hp, double dt, double t_offset) {
  if (hp.sigma == 0.0) throw ControlError("stage1", "control undefined for sigma = 0");
  const int m = u0.dim();
  for (double yi : u0.y)
    if (!(yi > 0.0)) throw ControlError("stage1", "y0 > 0 required");

  Vec v0(m);
  for (int i = 0; i < m; ++i) v0[i] = -hp.gamma * u0.z[i] / (std::sqrt(u0.y[i]) + hp.eps);

  PathSpec path;
  path.x = [=](double t, Vec& out) {
    const double s = (t - t_offset) / t1;
    out.resize(m);
    for (int i = 0; i < m; ++i) out[i] = h00(s) * u0.x[i] + t1 * h10(s) * v0[i] + h01(s) * x_target[i];
  };
  path.xd = [=](double t, Vec& out) {
    const double s = (t - t_offset) / t1;
    out.resize(m);
    for (int i = 0; i < m; ++i) out[i] = (dh00(s) * u0.x[i] + t1 * dh10(s) * v0[i] + dh01(s) * x_target[i]) / t1;
  };
  path.xdd = [=](double t, Vec& out) {
    const double s = (t - t_offset) / t1;
    out.resize(m);
    for (int i = 0; i < m; ++i)
      out[i] = (ddh00(s) * u0.x[i] + t1 * ddh10(s) * v0[i] + ddh01(s) * x_target[i]) / (t1 * t1);
  };
  return build_leg(path, u0.y, t_offset, t_offset + t1, obj, hp, dt);
}

Vec stage2_relax_y(const Vec& x_hold, const Vec& y_start, double big_s, const HyperParams& hp, const Objective& obj) {
  if (big_s < 0.0) throw std::invalid_argument("stage2_relax_y: S >= 0 required");
  const Vec target = grad_sq_plus_sigma(obj, x_hold, hp.sigma);
  const double decay = std::exp(-hp.b * big_s);
  Vec out(y_start.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = decay * y_start[i] + (1.0 - decay) * target[i];
  return out;
}

namespace {

// damped-Newton inverse of g(x) = ((d_1 f)^2, ..., (d_m f)^2) using Dg = 2A(x);
// iterates are projected back into the ball when they drift out by < 10% of its radius.
Vec invert_g(const Vec& target, const Vec& x_init, const Objective& obj, const RegularBall& ball, double tol,
             int max_iter) {
  const int m = static_cast<int>(target.size());
  Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(x_init.data(), m);
  const Eigen::Map<const Eigen::VectorXd> xs(ball.x_star.data(), m);
  const double rad = 2.0 * ball.rho_x;

  auto residual = [&](const Eigen::VectorXd& u) {
    Vec ux(u.data(), u.data() + m);
    Vec g = grad_sq_plus_sigma(obj, ux, 0.0);
    Eigen::VectorXd r(m);
    for (int i = 0; i < m; ++i) r[i] = g[i] - target[i];
    return r;
  };

  Eigen::VectorXd r = residual(x);
  for (int it = 0; it < max_iter; ++it) {
    if (r.norm() <= tol) break;
    const Vec ux(x.data(), x.data() + m);
    Eigen::MatrixXd J = 2.0 * matrix_A(ux, obj);
    Eigen::VectorXd step = J.partialPivLu().solve(r);
    double damp = 1.0;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::VectorXd xn = x - damp * step;
      if ((xn - xs).norm() > rad) {
        if ((xn - xs).norm() > 1.1 * rad) {
          damp *= 0.5;
          continue;
        }
        xn = xs + (xn - xs) * (rad / (xn - xs).norm());  // project back
      }
      const Eigen::VectorXd rn = residual(xn);
      if (rn.norm() < r.norm() || damp < 1e-6) {
        x = xn;
        r = rn;
        break;
      }
      damp *= 0.5;
    }
  }
  if (r.norm() > std::max(tol, 1e-8) * 100.0)
    throw ControlError("solve_xc", "g-inversion failed to converge inside the certified ball");
  return Vec(x.data(), x.data() + m);
}

}  // namespace

Vec solve_xc(const State& u0, const Vec& y_sharp, double t1, double big_s, const Objective& obj,
             const HyperParams& hp, const RegularBall& ball, double tol, int max_iter, double dt) {
  const int m = u0.dim();
  const double decay = std::exp(-hp.b * big_s);

  // y^c(U0, x): stage-1 endpoint of y when steering to x
  auto y_after_stage1 = [&](const Vec& x) { return stage1_initial_leg(u0, x, t1, obj, hp, dt).end().y; };

  // feasibility of the target: y_sharp - sigma^2 must have a g-preimage in the ball
  Vec base_target(m);
  for (int i = 0; i < m; ++i) base_target[i] = y_sharp[i] - sq(hp.sigma);
  Vec x = invert_g(base_target, ball.x_star, obj, ball, tol, 50);

  const Eigen::Map<const Eigen::VectorXd> xs(ball.x_star.data(), m);
  for (int it = 0; it < max_iter; ++it) {
    const Vec yc = y_after_stage1(x);
    Vec target(m);
    for (int i = 0; i < m; ++i) target[i] = (y_sharp[i] - decay * yc[i]) / (1.0 - decay) - sq(hp.sigma);
    const Vec x_next = invert_g(target, x, obj, ball, tol, 50);
    const Eigen::Map<const Eigen::VectorXd> xn(x_next.data(), m);
    if ((xn - xs).norm() > 2.0 * ball.rho_x * (1.0 + 1e-9))
      throw ControlError("solve_xc", "fixed-point iterate left the certified ball");
    double gap = 0.0;
    for (int i = 0; i < m; ++i) gap += sq(x_next[i] - x[i]);
    x = x_next;
    if (std::sqrt(gap) <= tol) return x;
  }
  throw ControlError("solve_xc", "no contraction after max_iter iterations (S too small?)");
}

Stage3Result stage3_final_leg(const Vec& x_c, const Vec& y_mid, const State& target, double delta_f,
                              const Objective& obj, const HyperParams& hp, const RegularBall& ball,
                              double tol_newton, double dt, double t_offset) {
  const int m = static_cast<int>(x_c.size());
  if (hp.sigma == 0.0) throw ControlError("stage3", "control undefined for sigma = 0");

  Vec v_sharp(m);
  for (int i = 0; i < m; ++i) v_sharp[i] = -hp.gamma * target.z[i] / (std::sqrt(target.y[i]) + hp.eps);
  if (delta_f * norm2(v_sharp) > 27.0 / 8.0 * ball.rho_x)
    throw ControlError("stage3", "containment precondition delta*|v#| <= 27/8 rho_x violated");

  const double t_end = t_offset + delta_f;

  // x^alpha(t) and its time derivatives; alpha enters through psi_delta(t) = psi(s)/delta
  auto make_path = [&](const Vec& alpha) {
    PathSpec path;
    path.x = [=](double t, Vec& out) {
      const double s = (t - t_offset) / delta_f;
      out.resize(m);
      for (int i = 0; i < m; ++i)
        out[i] = h00(s) * x_c[i] + h01(s) * target.x[i] + delta_f * h11(s) * v_sharp[i] + psi(s) / delta_f * alpha[i];
    };
    path.xd = [=](double t, Vec& out) {
      const double s = (t - t_offset) / delta_f;
      out.resize(m);
      for (int i = 0; i < m; ++i)
        out[i] = (dh00(s) * x_c[i] + dh01(s) * target.x[i] + delta_f * dh11(s) * v_sharp[i]) / delta_f +
                 dpsi(s) / (delta_f * delta_f) * alpha[i];
    };
    path.xdd = [=](double t, Vec& out) {
      const double s = (t - t_offset) / delta_f;
      out.resize(m);
      for (int i = 0; i < m; ++i)
        out[i] = (ddh00(s) * x_c[i] + ddh01(s) * target.x[i] + delta_f * ddh11(s) * v_sharp[i]) / (delta_f * delta_f) +
                 ddpsi(s) / (delta_f * delta_f * delta_f) * alpha[i];
    };
    return path;
  };

  // endpoint map Phi(alpha) = y^alpha(t_end) starting from y_mid
  const long n_sub = std::max<long>(400, static_cast<long>(std::llround(delta_f / dt)));
  auto phi_of = [&](const Vec& alpha) {
    const PathSpec path = make_path(alpha);
    Vec y = y_mid;
    Vec k1(m), k2(m), k3(m), k4(m), xbuf(m), gbuf(m), ytmp(m);
    const double step = delta_f / static_cast<double>(n_sub);
    for (long j = 0; j < n_sub; ++j)
      rk4_y_step(y, t_offset + j * step, step, hp.b, hp.sigma, obj, path.x, k1, k2, k3, k4, xbuf, gbuf, ytmp);
    return y;
  };

  // Newton on Phi(alpha) = y_sharp
  Eigen::MatrixXd J = hp.b * kPsiIntegral * 2.0 * matrix_A(x_c, obj);
  Vec alpha_vec(m, 0.0);
  Vec phi = phi_of(alpha_vec);
  auto res_norm = [&](const Vec& p) {
    double r = 0.0;
    for (int i = 0; i < m; ++i) r += sq(p[i] - target.y[i]);
    return std::sqrt(r);
  };
  double best = res_norm(phi);
  int iters = 0;
  bool refreshed = false;
  for (; iters < 25 && best > tol_newton; ++iters) {
    Eigen::VectorXd r(m);
    for (int i = 0; i < m; ++i) r[i] = phi[i] - target.y[i];
    const Eigen::VectorXd step = J.partialPivLu().solve(r);
    Vec alpha_next(m);
    for (int i = 0; i < m; ++i) alpha_next[i] = alpha_vec[i] - step[i];
    Vec phi_next = phi_of(alpha_next);
    if (res_norm(phi_next) < best) {
      alpha_vec = alpha_next;
      phi = phi_next;
      best = res_norm(phi);
      continue;
    }
    if (!refreshed) {
      // finite-difference refresh of the Jacobian around the current alpha
      refreshed = true;
      const double fd = 1e-6 * (1.0 + norm2(alpha_vec));
      for (int c = 0; c < m; ++c) {
        Vec ap = alpha_vec, am = alpha_vec;
        ap[c] += fd;
        am[c] -= fd;
        const Vec pp = phi_of(ap), pm = phi_of(am);
        for (int rID = 0; rID < m; ++rID) J(rID, c) = (pp[rID] - pm[rID]) / (2.0 * fd);
      }
      continue;
    }
    throw ControlError("stage3", "Newton stagnation on the bump perturbation");
  }
  if (best > tol_newton) throw ControlError("stage3", "Newton did not reach tolerance");

  Stage3Result out;
  out.alpha_star = alpha_vec;
  out.newton_iters = iters;
  out.y_residual = best;
  out.delta_used = delta_f;
  out.leg = build_leg(make_path(alpha_vec), y_mid, t_offset, t_end, obj, hp, dt);
  out.leg.max_excursion = max_dist_from(out.leg, ball.x_star);
  if (out.leg.max_excursion > 4.0 * ball.rho_x * (1.0 + 1e-9))
    throw ControlError("stage3", "path left the containment ball B(x_star, 4 rho_x)");
  return out;
}

PlanGeometry plan_geometry(const RegularPointCertificate& cert, const Objective& obj, const HyperParams& hp) {
  PlanGeometry geom;
  geom.x_star = cert.x_star;
  geom.r_cert = cert.radius;
  geom.rho_x = cert.radius / 4.0;
  geom.rho_z = std::min(hp.eps / hp.gamma, 1.0);
  geom.y_star = grad_sq_plus_sigma(obj, cert.x_star, hp.sigma);
  // rho_y small relative to the least-stretched direction of g so that the bump
  // perturbation needed to hold y stays inside the containment ball
  Eigen::MatrixXd dg = 2.0 * matrix_A(cert.x_star, obj);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dg);
  geom.rho_y = 0.1 * svd.singularValues().minCoeff() * geom.rho_x;
  return geom;
}

ControlPlan plan_full(const State& u0, const State& target, const Objective& obj, const HyperParams& hp,
                      const PlanGeometry& geom, const ControlSchedule& schedule, double tol) {
  const int m = u0.dim();
  hp.validate();
  if (!u0.finite() || !target.finite()) throw std::invalid_argument("plan_full: non-finite endpoint data");
  for (double yi : u0.y)
    if (!(yi > 0.0)) throw ControlError("plan", "start must have y0 > 0");

  // target in W'' = B(x*, rho_x) x B(0, rho_z) x B(y*, rho_y)
  {
    double dx = 0.0, dz = 0.0, dy = 0.0;
    for (int i = 0; i < m; ++i) {
      dx += sq(target.x[i] - geom.x_star[i]);
      dz += sq(target.z[i]);
      dy += sq(target.y[i] - geom.y_star[i]);
    }
    if (std::sqrt(dx) > geom.rho_x * (1.0 + 1e-9)) throw ControlError("plan", "target x outside B(x_star, rho_x)");
    if (std::sqrt(dz) > geom.rho_z * (1.0 + 1e-9)) throw ControlError("plan", "target z outside B(0, rho_z)");
    if (std::sqrt(dy) > geom.rho_y * (1.0 + 1e-9)) throw ControlError("plan", "target y outside B(y_star, rho_y)");
  }

  ControlPlan plan;
  plan.start = u0;
  plan.target = target;
  plan.dt = schedule.dt > 0.0 ? schedule.dt : 1e-3 * std::min(1.0, 1.0 / std::max({hp.a, hp.b, hp.gamma}));

  // stage lengths snapped to dt multiples so replay grids align with the control grid
  auto snap = [&](double t, long min_steps) {
    return std::max(min_steps, static_cast<long>(std::llround(t / plan.dt))) * plan.dt;
  };
  Vec v0(m);
  for (int i = 0; i < m; ++i) v0[i] = -hp.gamma * u0.z[i] / (std::sqrt(u0.y[i]) + hp.eps);
  plan.t1 = snap(schedule.t1 > 0.0 ? schedule.t1 : std::min(1.0, 6.75 * geom.r_cert / (1.0 + norm2(v0))), 2);
  plan.big_s = snap(schedule.big_s > 0.0 ? schedule.big_s : 20.0 / hp.b, 2);

  Vec v_sharp(m);
  for (int i = 0; i < m; ++i) v_sharp[i] = -hp.gamma * target.z[i] / (std::sqrt(target.y[i]) + hp.eps);
  plan.delta_f = snap(
      schedule.delta_f > 0.0 ? schedule.delta_f : std::min(27.0 * geom.rho_x / (8.0 * (1.0 + norm2(v_sharp))), 0.5),
      8);

  const RegularBall ball{geom.x_star, geom.rho_x, geom.r_cert};

  // stage 1+2 hold point, then the three legs; Newton failures retry with delta halved
  plan.x_c = solve_xc(u0, target.y, plan.t1, plan.big_s, obj, hp, ball, 1e-12, 200, plan.dt);
  StageLeg leg1 = stage1_initial_leg(u0, plan.x_c, plan.t1, obj, hp, plan.dt, 0.0);
  leg1.max_excursion = max_dist_from(leg1, geom.x_star);

  const Vec y_mid = stage2_relax_y(plan.x_c, leg1.end().y, plan.big_s, hp, obj);

  Stage3Result s3;
  double delta = plan.delta_f;
  for (int attempt = 0;; ++attempt) {
    try {
      s3 = stage3_final_leg(plan.x_c, y_mid, target, delta, obj, hp, ball, 1e-10, plan.dt, plan.t1 + plan.big_s);
      break;
    } catch (const ControlError&) {
      if (attempt >= 3) throw;
      delta = snap(0.5 * delta, 8);
    }
  }
  plan.delta_f = s3.delta_used;
  plan.alpha_star = s3.alpha_star;
  plan.max_excursion_stage3 = s3.leg.max_excursion;

  // assemble the control: stage 1, constant stage-2 hold, stage 3; stage boundaries are
  // genuine jumps of h and enter as duplicated nodes
  plan.control = leg1.control;
  Vec g_c(m);
  obj.gradient(plan.x_c, g_c);
  Vec hold(m);
  for (int i = 0; i < m; ++i) hold[i] = -g_c[i] / hp.sigma;
  plan.control.append(plan.t1, hold);  // jump into the stage-2 hold
  plan.control.append(plan.t1 + plan.big_s, hold);
  for (std::size_t j = 0; j < s3.leg.control.times.size(); ++j)
    plan.control.append(s3.leg.control.times[j], s3.leg.control.values[j]);

  // analytic endpoint of the constructed trajectory
  plan.analytic_end = s3.leg.end();
  {
    double err = 0.0;
    for (int i = 0; i < m; ++i)
      err += sq(plan.analytic_end.x[i] - target.x[i]) + sq(plan.analytic_end.z[i] - target.z[i]) +
             sq(plan.analytic_end.y[i] - target.y[i]);
    plan.analytic_error = std::sqrt(err);
  }

  // replay through the generic integrator
  const Trajectory replay = integrate_skeleton(u0, plan.control, obj, hp, plan.dt);
  plan.replay_end = replay.terminal();
  {
    double err = 0.0;
    for (int i = 0; i < m; ++i)
      err += sq(plan.replay_end.x[i] - target.x[i]) + sq(plan.replay_end.z[i] - target.z[i]) +
             sq(plan.replay_end.y[i] - target.y[i]);
    plan.replay_error = std::sqrt(err);
  }

  double hold_dist = 0.0;
  for (int i = 0; i < m; ++i) hold_dist += sq(plan.x_c[i] - geom.x_star[i]);
  plan.max_excursion = std::max({leg1.max_excursion, plan.max_excursion_stage3, std::sqrt(hold_dist)});
  plan.success = plan.replay_error <= tol && plan.analytic_error <= tol;
  return plan;
}

}  // namespace adamlab
