#pragma once

#include <cmath>

#include "hamopt/problem.hpp"

namespace hamopt::problems {

/// Two stacked fluid tanks. The inflow valve of the upper tank switches
/// between the rates {1, 2}; outflows follow Torricelli's law. The lower
/// tank's level is steered toward 3.
///
///   dx1/dt = u - sqrt(x1)
///   dx2/dt = sqrt(x1) - sqrt(x2)
///   L(x)   = 2 (x2 - 3)^2,   x0 = (2, 2),  t_f = 10,  U = {1, 2}.
///
/// Square-root arguments are clamped at zero with subgradient zero there;
/// trajectories in the benchmark regime stay positive so the guard is
/// dormant. The Hamiltonian minimizer is u* = 1 when p1 >= 0 else 2 (the
/// p1 = 0 tie goes to 1).
class DoubleTank final : public Problem {
 public:
  DoubleTank() : hull_(ControlHull::finite_set({2.0, 1.0})) {}

  std::string name() const override { return "double-tank"; }
  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }

  Vector dynamics(const Vector& x, const Vector& u) const override {
    const double s1 = safe_sqrt(x[0]);
    const double s2 = safe_sqrt(x[1]);
    return (Vector(2) << u[0] - s1, s1 - s2).finished();
  }

  Matrix dynamics_jac_x(const Vector& x, const Vector& /*u*/) const override {
    const double d1 = sqrt_slope(x[0]);
    const double d2 = sqrt_slope(x[1]);
    Matrix j(2, 2);
    j << -d1, 0.0, d1, -d2;
    return j;
  }

  double running_cost(const Vector& x, const Vector& /*u*/) const override {
    const double e = x[1] - 3.0;
    return 2.0 * e * e;
  }

  Vector running_cost_grad_x(const Vector& x, const Vector& /*u*/) const override {
    return (Vector(2) << 0.0, 4.0 * (x[1] - 3.0)).finished();
  }

  Vector hamiltonian_minimizer(const Vector& /*x*/, const Vector& p) const override {
    return Vector::Constant(1, p[0] >= 0.0 ? 1.0 : 2.0);
  }

  const ControlHull& control_hull() const override { return hull_; }
  bool affine_in_control() const override { return true; }
  bool convex_cost_in_control() const override { return true; }

  Vector initial_state() const override { return Vector::Constant(2, 2.0); }
  double horizon() const override { return 10.0; }

  OrdinaryControl default_initial_control(const TimeGrid& grid) const override {
    return OrdinaryControl::constant(grid, Vector::Constant(1, 1.0));
  }

  // levels stay below ~4 in the benchmark regime, so 2*(4-3+2)^2 is generous
  double running_cost_bound() const override { return 20.0; }

  void diagnostic_ranges(Vector& x_lo, Vector& x_hi, double& p_mag) const override {
    x_lo = Vector::Constant(2, 0.5);
    x_hi = Vector::Constant(2, 4.0);
    p_mag = 5.0;
  }

 private:
  static double safe_sqrt(double v) { return std::sqrt(std::max(v, 0.0)); }
  static double sqrt_slope(double v) { return v <= 0.0 ? 0.0 : 0.5 / std::sqrt(v); }

  ControlHull hull_;
};

}  // namespace hamopt::problems
