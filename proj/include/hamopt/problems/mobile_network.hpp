#pragma once

#include <cmath>
#include <numbers>

#include "hamopt/problem.hpp"

namespace hamopt::problems {

/// Path planning for a chain of N mobile relay agents on a segment [0, d].
/// Agent positions are the state, agent velocities the control:
///
///   dx/dt = u,   |u_i| <= ubar,
///   L = sum_{i=1}^{N+1} (x_i - x_{i-1})^2 + C sum_i |u_i|,
///
/// with fixed anchors x_0 := 0 and x_{N+1} := d. Transmission power grows
/// with the square of the hop length; fuel burns proportionally to speed.
/// The Hamiltonian is separable so its minimizer is coordinate-wise:
/// u*_i = -sgn(p_i) ubar when |p_i| > C, else 0 (the |p_i| = C boundary takes
/// the zero branch).
class MobileNetwork final : public Problem {
 public:
  struct Params {
    int n_agents = 6;
    double span = 20.0;         // d
    double fuel_weight = 7.0;   // C
    double u_max = 1.0;         // ubar
    double t_f = 20.0;
    Vector x0 = (Vector(6) << 1.0, 2.0, 7.0, 9.0, 12.0, 19.0).finished();

    void validate() const {
      if (n_agents < 1) throw std::invalid_argument("MobileNetwork: need at least one agent");
      if (span <= 0.0 || fuel_weight <= 0.0 || u_max <= 0.0 || t_f <= 0.0)
        throw std::invalid_argument("MobileNetwork: d, C, ubar, t_f must be positive");
      if (x0.size() != n_agents)
        throw std::invalid_argument("MobileNetwork: x0 dimension mismatch");
    }
  };

  MobileNetwork() : MobileNetwork(Params{}) {}

  explicit MobileNetwork(Params params)
      : params_(std::move(params)),
        hull_(ControlHull::box(Vector::Constant(params_.n_agents, -params_.u_max),
                               Vector::Constant(params_.n_agents, params_.u_max))) {
    params_.validate();
  }

  std::string name() const override { return "mobile-network"; }
  int state_dim() const override { return params_.n_agents; }
  int control_dim() const override { return params_.n_agents; }

  Vector dynamics(const Vector& /*x*/, const Vector& u) const override { return u; }

  Matrix dynamics_jac_x(const Vector& /*x*/, const Vector& /*u*/) const override {
    return Matrix::Zero(params_.n_agents, params_.n_agents);
  }

  double running_cost(const Vector& x, const Vector& u) const override {
    const int n = params_.n_agents;
    double hops = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double gap = anchor(x, i + 1) - anchor(x, i);
      hops += gap * gap;
    }
    return hops + params_.fuel_weight * u.cwiseAbs().sum();
  }

  Vector running_cost_grad_x(const Vector& x, const Vector& /*u*/) const override {
    const int n = params_.n_agents;
    Vector g(n);
    for (int i = 1; i <= n; ++i) {
      g[i - 1] = 2.0 * (anchor(x, i) - anchor(x, i - 1)) - 2.0 * (anchor(x, i + 1) - anchor(x, i));
    }
    return g;
  }

  Vector hamiltonian_minimizer(const Vector& /*x*/, const Vector& p) const override {
    Vector u = Vector::Zero(params_.n_agents);
    for (int i = 0; i < params_.n_agents; ++i) {
      if (std::abs(p[i]) > params_.fuel_weight)
        u[i] = p[i] > 0.0 ? -params_.u_max : params_.u_max;
    }
    return u;
  }

  const ControlHull& control_hull() const override { return hull_; }
  bool affine_in_control() const override { return true; }
  bool convex_cost_in_control() const override { return true; }

  Vector initial_state() const override { return params_.x0; }
  double horizon() const override { return params_.t_f; }

  /// The experiment's starting guess, chosen deliberately far from optimal:
  /// u1 = 1, u2 = sin(pi t / 4), u3 = 3 u2, u4 = 2 u3, u5 = 2 u4,
  /// u6 = u5 - 4.3, truncated/extended to the agent count and sampled as a
  /// zero-order hold. Exceeds the velocity bound on purpose and is flagged
  /// accordingly.
  OrdinaryControl default_initial_control(const TimeGrid& grid) const override {
    OrdinaryControl u{grid, std::vector<Vector>(static_cast<std::size_t>(grid.n_steps()))};
    u.allow_infeasible = true;
    for (int k = 0; k < grid.n_steps(); ++k) {
      const double t = grid.instant(k);
      Vector v = Vector::Zero(params_.n_agents);
      const double base = std::sin(std::numbers::pi * t / 4.0);
      const double profile[6] = {1.0, base, 3.0 * base, 6.0 * base, 12.0 * base,
                                 12.0 * base - 4.3};
      for (int i = 0; i < params_.n_agents; ++i) v[i] = profile[std::min(i, 5)];
      u.at(k) = std::move(v);
    }
    return u;
  }

  double running_cost_bound() const override {
    const int n = params_.n_agents;
    return (n + 1) * params_.span * params_.span +
           params_.fuel_weight * n * params_.u_max;
  }

  void diagnostic_ranges(Vector& x_lo, Vector& x_hi, double& p_mag) const override {
    x_lo = Vector::Constant(params_.n_agents, 0.0);
    x_hi = Vector::Constant(params_.n_agents, params_.span);
    p_mag = 2.0 * params_.fuel_weight;
  }

  const Params& params() const { return params_; }

 private:
  // x_0 and x_{N+1} are the fixed endpoints of the relay chain
  double anchor(const Vector& x, int i) const {
    if (i == 0) return 0.0;
    if (i == params_.n_agents + 1) return params_.span;
    return x[i - 1];
  }

  Params params_;
  ControlHull hull_;
};

}  // namespace hamopt::problems
