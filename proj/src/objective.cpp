#include "adamlab/objective.hpp"

#include <cmath>
#include <limits>

#include "adamlab/rng.hpp"

namespace adamlab {

namespace {

void require_dim(const Objective& obj, std::span<const double> x) {
  if (static_cast<int>(x.size()) != obj.dim())
    throw std::invalid_argument("objective: expected dimension " + std::to_string(obj.dim()) + ", got " +
                                std::to_string(x.size()));
}

}  // namespace

void Objective::hessian(std::span<const double> x, Eigen::MatrixXd& h) const {
  const int m = dim();
  h.resize(m, m);
  Vec xp(x.begin(), x.end()), gp(m), gm(m);
  const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  for (int i = 0; i < m; ++i) {
    const double step = base * std::max(1.0, std::abs(x[i]));
    const double xi = xp[i];
    xp[i] = xi + step;
    gradient(xp, gp);
    xp[i] = xi - step;
    gradient(xp, gm);
    xp[i] = xi;
    for (int j = 0; j < m; ++j) h(i, j) = (gp[j] - gm[j]) / (2.0 * step);
  }
}

Eigen::VectorXd Objective::grad(std::span<const double> x) const {
  Eigen::VectorXd g(dim());
  gradient(x, std::span<double>(g.data(), g.size()));
  return g;
}

Eigen::MatrixXd Objective::hess(std::span<const double> x) const {
  Eigen::MatrixXd h;
  hessian(x, h);
  return h;
}

namespace {

class Quadratic final : public Objective {
 public:
  Quadratic(Eigen::MatrixXd Q, Eigen::VectorXd q) : Objective(static_cast<int>(q.size())), Q_(std::move(Q)), q_(std::move(q)) {
    if (Q_.rows() != Q_.cols() || Q_.rows() != q_.size()) throw std::invalid_argument("quadratic: Q/q shape mismatch");
    if (((Q_ - Q_.transpose()).cwiseAbs().maxCoeff()) > 1e-12 * (1.0 + Q_.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("quadratic: Q must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q_);
    lmin_ = es.eigenvalues().minCoeff();
    lmax_ = es.eigenvalues().maxCoeff();
    if (lmin_ <= 0.0) throw std::invalid_argument("quadratic: Q must be positive definite");
    xstar_ = -Q_.ldlt().solve(q_);
    fstar_ = 0.5 * xstar_.dot(Q_ * xstar_) + q_.dot(xstar_);
  }

  double value(std::span<const double> xs) const override {
    require_dim(*this, xs);
    Eigen::Map<const Eigen::VectorXd> x(xs.data(), xs.size());
    return 0.5 * x.dot(Q_ * x) + q_.dot(x);
  }

  void gradient(std::span<const double> xs, std::span<double> g) const override {
    require_dim(*this, xs);
    Eigen::Map<const Eigen::VectorXd> x(xs.data(), xs.size());
    Eigen::Map<Eigen::VectorXd>(g.data(), g.size()) = Q_ * x + q_;
  }

  void hessian(std::span<const double> xs, Eigen::MatrixXd& h) const override {
    require_dim(*this, xs);
    h = Q_;
  }

  double lipschitz() const override { return lmax_; }
  double dissipativity() const override { return lmin_; }
  // <Qx + q, x> >= lmin|x|^2 - |q||x| >= (lmin/2)|x|^2 - |q|^2/(2 lmin); report the exact
  // strongly-convex constant with the matching offset.
  double dissip_offset() const override { return 0.5 * q_.squaredNorm() / lmin_; }
  double min_value() const override { return fstar_; }
  Vec minimizer() const override { return Vec(xstar_.data(), xstar_.data() + xstar_.size()); }
  std::string kind() const override { return "quadratic"; }

  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::VectorXd& q() const { return q_; }

 private:
  Eigen::MatrixXd Q_;
  Eigen::VectorXd q_;
  Eigen::VectorXd xstar_;
  double lmin_, lmax_, fstar_;
};

class QuadCosine final : public Objective {
 public:
  QuadCosine(double m_q, double s, int dim) : Objective(dim), mq_(m_q), s_(s) {
    if (m_q <= 0.0 || s < 0.0) throw std::invalid_argument("quad_cosine: need m_q > 0, s >= 0");
    // Separable: minimize t -> m_q t^2/2 + s cos(t) by multi-start local descent.
    per_coord_min_ = minimize_1d();
  }

  double value(std::span<const double> x) const override {
    require_dim(*this, x);
    double f = 0.0;
    for (double t : x) f += 0.5 * mq_ * t * t + s_ * std::cos(t);
    return f;
  }

  void gradient(std::span<const double> x, std::span<double> g) const override {
    require_dim(*this, x);
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = mq_ * x[i] - s_ * std::sin(x[i]);
  }

  void hessian(std::span<const double> x, Eigen::MatrixXd& h) const override {
    require_dim(*this, x);
    h = Eigen::MatrixXd::Zero(dim(), dim());
    for (int i = 0; i < dim(); ++i) h(i, i) = mq_ - s_ * std::cos(x[i]);
  }

  double lipschitz() const override { return mq_ + s_; }
  double dissipativity() const override { return 0.5 * mq_; }
  // <grad f, x> = m_q|x|^2 - s sum x_i sin x_i >= (m_q/2)|x|^2 - s^2 m /(2 m_q).
  double dissip_offset() const override { return 0.5 * s_ * s_ * dim() / mq_; }
  double min_value() const override { return per_coord_min_.second * dim(); }
  Vec minimizer() const override { return Vec(dim(), per_coord_min_.first); }
  std::string kind() const override { return "quad_cosine"; }

  double m_q() const { return mq_; }
  double s() const { return s_; }

 private:
  std::pair<double, double> minimize_1d() const {
    auto phi = [&](double t) { return 0.5 * mq_ * t * t + s_ * std::cos(t); };
    auto dphi = [&](double t) { return mq_ * t - s_ * std::sin(t); };
    auto ddphi = [&](double t) { return mq_ - s_ * std::cos(t); };
    double best_t = 0.0, best_f = phi(0.0);
    const double span = 2.0 + 2.0 * s_ / mq_;
    for (int k = -8; k <= 8; ++k) {
      double t = span * k / 8.0;
      for (int it = 0; it < 200; ++it) {
        const double d1 = dphi(t), d2 = ddphi(t);
        double step = d2 > 1e-12 ? d1 / d2 : d1;
        // damped Newton, never worse than a short gradient step
        double tn = t - step;
        if (phi(tn) > phi(t)) tn = t - 0.1 * d1;
        if (std::abs(tn - t) < 1e-14) {
          t = tn;
          break;
        }
        t = tn;
      }
      if (std::abs(dphi(t)) < 1e-10 && phi(t) < best_f) {
        best_f = phi(t);
        best_t = t;
      }
    }
    return {best_t, best_f};
  }

  double mq_, s_;
  std::pair<double, double> per_coord_min_;
};

class Linear final : public Objective {
 public:
  explicit Linear(Eigen::VectorXd g) : Objective(static_cast<int>(g.size())), g_(std::move(g)) {}

  double value(std::span<const double> x) const override {
    require_dim(*this, x);
    return dot(std::span<const double>(g_.data(), g_.size()), x);
  }
  void gradient(std::span<const double> x, std::span<double> g) const override {
    require_dim(*this, x);
    for (int i = 0; i < dim(); ++i) g[i] = g_[i];
  }
  void hessian(std::span<const double> x, Eigen::MatrixXd& h) const override {
    require_dim(*this, x);
    h = Eigen::MatrixXd::Zero(dim(), dim());
  }
  double lipschitz() const override { return 0.0; }
  double dissipativity() const override { return 0.0; }
  double min_value() const override { return -std::numeric_limits<double>::infinity(); }
  Vec minimizer() const override { return Vec(dim(), 0.0); }
  bool dissipative() const override { return false; }
  std::string kind() const override { return "linear"; }
  const Eigen::VectorXd& g() const { return g_; }

 private:
  Eigen::VectorXd g_;
};

class Constant final : public Objective {
 public:
  Constant(double c0, int dim) : Objective(dim), c0_(c0) {}
  double value(std::span<const double> x) const override {
    require_dim(*this, x);
    return c0_;
  }
  void gradient(std::span<const double> x, std::span<double> g) const override {
    require_dim(*this, x);
    for (auto& t : g) t = 0.0;
  }
  void hessian(std::span<const double> x, Eigen::MatrixXd& h) const override {
    require_dim(*this, x);
    h = Eigen::MatrixXd::Zero(dim(), dim());
  }
  double lipschitz() const override { return 0.0; }
  double dissipativity() const override { return 0.0; }
  double min_value() const override { return c0_; }
  Vec minimizer() const override { return Vec(dim(), 0.0); }
  bool dissipative() const override { return false; }
  std::string kind() const override { return "constant"; }
  double c0() const { return c0_; }

 private:
  double c0_;
};

}  // namespace

ObjectivePtr make_quadratic(Eigen::MatrixXd Q, Eigen::VectorXd q) {
  return std::make_shared<Quadratic>(std::move(Q), std::move(q));
}

ObjectivePtr make_quadratic(int dim, double scale) {
  return make_quadratic(scale * Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim));
}

ObjectivePtr make_quad_cosine(double m_q, double s, int dim) { return std::make_shared<QuadCosine>(m_q, s, dim); }

ObjectivePtr make_linear(Eigen::VectorXd g) { return std::make_shared<Linear>(std::move(g)); }

ObjectivePtr make_constant(double c0, int dim) { return std::make_shared<Constant>(c0, dim); }

std::variant<double, Vec, Eigen::MatrixXd> evaluate(const Objective& obj, std::span<const double> x, int order) {
  require_dim(obj, x);
  switch (order) {
    case 0: {
      const double f = obj.value(x);
      if (!std::isfinite(f)) throw std::domain_error("objective value is not finite");
      return f;
    }
    case 1: {
      Vec g(obj.dim());
      obj.gradient(x, g);
      for (double t : g)
        if (!std::isfinite(t)) throw std::domain_error("objective gradient is not finite");
      return g;
    }
    case 2: {
      Eigen::MatrixXd h;
      obj.hessian(x, h);
      if (!h.allFinite()) throw std::domain_error("objective Hessian is not finite");
      return h;
    }
    default:
      throw std::invalid_argument("evaluate: order must be 0, 1, or 2");
  }
}

ConditionReport check_conditions(const Objective& obj, int n_samples, double box_radius, std::uint64_t seed,
                                 const DeclaredConditions* declared) {
  if (n_samples < 1) throw std::invalid_argument("check_conditions: n_samples >= 1 required");
  const int m = obj.dim();
  ConditionReport rep;
  rep.n_samples = n_samples;
  rep.min_dissipativity_slack = std::numeric_limits<double>::infinity();

  DeclaredConditions dc;
  if (declared) {
    dc = *declared;
  } else {
    dc = {obj.lipschitz(), obj.dissipative() ? obj.dissipativity() : 0.0, obj.dissip_offset(), obj.dissip_radius()};
  }
  rep.claims_dissipativity = dc.dissipativity > 0.0;

  SequentialRng rng(seed, 0x0b1ec71fu);
  Vec x(m), x2(m), g(m), g2(m);
  Eigen::MatrixXd h;

  for (int s = 0; s < n_samples; ++s) {
    for (int i = 0; i < m; ++i) {
      x[i] = rng.uniform(-box_radius, box_radius);
      x2[i] = rng.uniform(-box_radius, box_radius);
    }
    obj.gradient(x, g);
    obj.gradient(x2, g2);

    double dx = 0.0, dg = 0.0;
    for (int i = 0; i < m; ++i) {
      dx += sq(x[i] - x2[i]);
      dg += sq(g[i] - g2[i]);
    }
    if (dx > 0.0) {
      const double ratio = std::sqrt(dg / dx);
      rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, ratio);
      if (ratio > dc.lipschitz * (1.0 + 1e-9) + 1e-12) rep.lipschitz_ok = false;
    }

    if (rep.claims_dissipativity && norm2(x) >= dc.radius) {
      const double slack = dot(g, x) - dc.dissipativity * norm2_sq(x) + dc.offset;
      rep.min_dissipativity_slack = std::min(rep.min_dissipativity_slack, slack);
      if (slack < -1e-9 * (1.0 + dc.dissipativity * norm2_sq(x))) rep.dissipativity_ok = false;
    }

    obj.hessian(x, h);
    const double asym = (h - h.transpose()).cwiseAbs().maxCoeff();
    const double rel = asym / (1.0 + h.cwiseAbs().maxCoeff());
    rep.max_hessian_asymmetry = std::max(rep.max_hessian_asymmetry, rel);
    if (rel > 1e-8) rep.hessian_symmetric = false;
  }
  return rep;
}

}  // namespace adamlab
