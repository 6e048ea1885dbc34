#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "hamopt/problem.hpp"

namespace hamopt::problems {

/// Switched-linear regulator: dx/dt = A x + b v with b drawn from a
/// three-element set and |v| <= 20. All modes are unstable; the run steers
/// x from the origin toward (1, 1, 1) over t_f = 2 while penalizing input
/// energy:
///
///   J = 0.01 int v^2 dt + ||x(t_f) - (1,1,1)||^2.
///
/// Controls are encoded as pairs u = (mode index in {1,2,3}, amplitude v).
/// The terminal cost enters through the costate boundary condition only.
class HybridLqr final : public Problem {
 public:
  HybridLqr() : hull_(ControlHull::mode_amplitude(3, -kVMax, kVMax)) {
    A_ << 1.0979, -0.0105, 0.0167,
        -0.0105, 1.0481, 0.0825,
        0.0167, 0.0825, 1.1540;
    b_[0] = (Vector(3) << 0.9801, -0.1987, 0.0).finished();
    b_[1] = (Vector(3) << 0.1743, 0.8601, -0.4794).finished();
    b_[2] = (Vector(3) << 0.0952, 0.4699, 0.8776).finished();
    x_target_ = Vector::Ones(3);
  }

  std::string name() const override { return "hybrid-lqr"; }
  int state_dim() const override { return 3; }
  int control_dim() const override { return 2; }

  Vector dynamics(const Vector& x, const Vector& u) const override {
    return A_ * x + column(u) * u[1];
  }

  Matrix dynamics_jac_x(const Vector& /*x*/, const Vector& /*u*/) const override { return A_; }

  double running_cost(const Vector& /*x*/, const Vector& u) const override {
    return kEnergyWeight * u[1] * u[1];
  }

  Vector running_cost_grad_x(const Vector& /*x*/, const Vector& /*u*/) const override {
    return Vector::Zero(3);
  }

  double terminal_cost(const Vector& x) const override { return (x - x_target_).squaredNorm(); }

  Vector terminal_cost_grad(const Vector& x) const override { return 2.0 * (x - x_target_); }

  /// Per mode, the unconstrained stationary amplitude v_i = -p'b_i / 0.02
  /// clamped to [-20, 20]; the returned pair is the mode with the smallest
  /// Hamiltonian contribution p'b_i v_i + 0.01 v_i^2, ties to the lowest
  /// index.
  Vector hamiltonian_minimizer(const Vector& /*x*/, const Vector& p) const override {
    int best_mode = 0;
    double best_v = 0.0;
    double best_h = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
      const double pb = p.dot(b_[static_cast<std::size_t>(i)]);
      double v = -pb / (2.0 * kEnergyWeight);
      v = std::clamp(v, -kVMax, kVMax);
      const double h = pb * v + kEnergyWeight * v * v;
      if (h < best_h) {
        best_h = h;
        best_mode = i;
        best_v = v;
      }
    }
    return (Vector(2) << static_cast<double>(best_mode + 1), best_v).finished();
  }

  const ControlHull& control_hull() const override { return hull_; }
  bool affine_in_control() const override { return false; }  // bilinear mode/amplitude term
  bool convex_cost_in_control() const override { return true; }

  Vector initial_state() const override { return Vector::Zero(3); }
  double horizon() const override { return 2.0; }

  OrdinaryControl default_initial_control(const TimeGrid& grid) const override {
    return OrdinaryControl::constant(grid, (Vector(2) << 1.0, 0.0).finished());
  }

  double running_cost_bound() const override { return kEnergyWeight * kVMax * kVMax; }

  /// Cheapest same-field representation of a mixture. Per cell, atoms in one
  /// mode are first replaced by their conditional-mean amplitude (the field
  /// term b_i v is linear in v, and v^2 is convex, so the field is unchanged
  /// and the cost does not increase). The per-mode means (gamma_i, vbar_i)
  /// are then rebalanced to a single common amplitude
  ///   w = sum_i gamma_i |vbar_i|,  weight_i -> gamma_i |vbar_i| / w,
  ///   amplitude_i -> sign(vbar_i) w,
  /// which attains the minimum of sum gamma_i v_i^2 over all mode/amplitude
  /// splittings of the same field vector. Without this rewrite the energy of
  /// early large-amplitude atoms stays trapped in the mixture and the descent
  /// stalls far from the optimum.
  RelaxedMixture compress_mixture(RelaxedMixture mu) const override {
    const int n = mu.grid().n_steps();
    for (int k = 0; k < n; ++k) {
      std::array<double, 3> mass{0.0, 0.0, 0.0};
      std::array<double, 3> mean_amp{0.0, 0.0, 0.0};
      for (const RelaxedMixture::Atom& a : mu.atoms()) {
        const int m = mode_index(a.control.at(k));
        mass[static_cast<std::size_t>(m)] += a.weight[k];
        mean_amp[static_cast<std::size_t>(m)] += a.weight[k] * a.control.at(k)[1];
      }
      double w = 0.0;
      for (int i = 0; i < 3; ++i) {
        if (mass[static_cast<std::size_t>(i)] > 0.0)
          mean_amp[static_cast<std::size_t>(i)] /= mass[static_cast<std::size_t>(i)];
        w += mass[static_cast<std::size_t>(i)] * std::abs(mean_amp[static_cast<std::size_t>(i)]);
      }
      if (w <= 0.0) continue;  // zero field at this cell, nothing to rebalance
      for (RelaxedMixture::Atom& a : mu.atoms()) {
        const int m = mode_index(a.control.at(k));
        const double vbar = mean_amp[static_cast<std::size_t>(m)];
        a.control.at(k)[1] = vbar >= 0.0 ? w : -w;
        a.weight[k] *= std::abs(vbar) / w;
      }
    }
    mu.renormalize();
    return mu;
  }

  void diagnostic_ranges(Vector& x_lo, Vector& x_hi, double& p_mag) const override {
    x_lo = Vector::Constant(3, -2.0);
    x_hi = Vector::Constant(3, 2.0);
    p_mag = 5.0;
  }

  const Matrix& system_matrix() const { return A_; }
  const Vector& mode_column(int mode) const { return b_[static_cast<std::size_t>(mode - 1)]; }

 private:
  static constexpr double kVMax = 20.0;
  static constexpr double kEnergyWeight = 0.01;

  const Vector& column(const Vector& u) const {
    return b_[static_cast<std::size_t>(mode_index(u))];
  }
  static int mode_index(const Vector& u) { return static_cast<int>(std::lround(u[0])) - 1; }

  Matrix A_{3, 3};
  std::array<Vector, 3> b_;
  Vector x_target_;
  ControlHull hull_;
};

}  // namespace hamopt::problems
