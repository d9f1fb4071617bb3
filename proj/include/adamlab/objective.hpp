#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <variant>

#include "adamlab/common.hpp"

namespace adamlab {

// Objective f: R^m -> R with gradient, Hessian, and the constants entering the
// smoothness / dissipativity conditions:
//   (A1)  ||grad f(x) - grad f(x')|| <= L_f ||x - x'||
//   (A2)  <grad f(x), x> >= m_f ||x||^2 - c  for ||x|| >= R
class Objective {
 public:
  explicit Objective(int dim) : dim_(dim) {}
  virtual ~Objective() = default;

  int dim() const { return dim_; }

  virtual double value(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> g) const = 0;
  /// Default falls back to central differences of the gradient.
  virtual void hessian(std::span<const double> x, Eigen::MatrixXd& h) const;

  virtual double lipschitz() const = 0;      // L_f
  virtual double dissipativity() const = 0;  // m_f
  virtual double dissip_offset() const { return 0.0; }  // c
  virtual double dissip_radius() const { return 0.0; }  // R
  virtual double min_value() const = 0;                 // f_*
  virtual Vec minimizer() const = 0;                    // some x_*
  /// False for the test-only variants that violate (A2).
  virtual bool dissipative() const { return true; }
  virtual std::string kind() const = 0;

  // Eigen conveniences.
  double value(const Eigen::VectorXd& x) const { return value(std::span<const double>(x.data(), x.size())); }
  Eigen::VectorXd grad(std::span<const double> x) const;
  Eigen::MatrixXd hess(std::span<const double> x) const;

 private:
  int dim_;
};

using ObjectivePtr = std::shared_ptr<Objective>;

/// f = 0.5 x'Qx + q'x, Q symmetric positive definite.
ObjectivePtr make_quadratic(Eigen::MatrixXd Q, Eigen::VectorXd q);
ObjectivePtr make_quadratic(int dim, double scale = 1.0);  // Q = scale*I, q = 0
/// f = 0.5 m_q ||x||^2 + s * sum_i cos(x_i); nonconvex for s > 0 but still dissipative.
ObjectivePtr make_quad_cosine(double m_q, double s, int dim);
/// Test-only: f = g'x (violates (A2)).
ObjectivePtr make_linear(Eigen::VectorXd g);
/// Test-only: f = c0 (violates (A2)).
ObjectivePtr make_constant(double c0, int dim);

/// order 0 -> f(x), 1 -> grad f(x), 2 -> Hessian. Throws std::invalid_argument on a
/// dimension mismatch and std::domain_error if the result is not finite.
std::variant<double, Vec, Eigen::MatrixXd> evaluate(const Objective& obj, std::span<const double> x, int order);

/// Declared (A1)/(A2) constants to test; defaults to the objective's own metadata.
struct DeclaredConditions {
  double lipschitz;      // L_f
  double dissipativity;  // m_f; <= 0 means (A2) is not claimed
  double offset;         // c
  double radius;         // R
};

struct ConditionReport {
  int n_samples = 0;
  double max_lipschitz_ratio = 0.0;      // observed sup ||dg||/||dx||
  double min_dissipativity_slack = 0.0;  // min of <grad f, x> - m_f||x||^2 + c over ||x|| >= R
  double max_hessian_asymmetry = 0.0;    // relative, max-norm
  bool claims_dissipativity = false;
  bool lipschitz_ok = true;
  bool dissipativity_ok = true;
  bool hessian_symmetric = true;
  bool violation() const { return !(lipschitz_ok && dissipativity_ok && hessian_symmetric); }
};

/// Samples the box [-box_radius, box_radius]^m and stress-tests the declared constants.
ConditionReport check_conditions(const Objective& obj, int n_samples, double box_radius, std::uint64_t seed,
                                 const DeclaredConditions* declared = nullptr);

}  // namespace adamlab
