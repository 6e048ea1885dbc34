#pragma once

#include <vector>

#include "hamopt/control.hpp"
#include "hamopt/problem.hpp"
#include "hamopt/types.hpp"

namespace hamopt {

namespace detail {

// Shared forward-Euler kernel. AtomRange yields (weight_at(k), control_at(k))
// pairs; a one-atom mixture with unit weight reproduces the ordinary-control
// path bit for bit because multiplying by 1.0 and summing a single term are
// exact.
template <typename FieldFn>
std::vector<Vector> euler_forward(const TimeGrid& grid, const Vector& x0, FieldFn&& field) {
  std::vector<Vector> x(static_cast<std::size_t>(grid.n_steps()) + 1);
  x[0] = x0;
  const double dt = grid.dt();
  for (int k = 0; k < grid.n_steps(); ++k) {
    x[static_cast<std::size_t>(k) + 1] = x[static_cast<std::size_t>(k)] + dt * field(k, x[static_cast<std::size_t>(k)]);
    if (!x[static_cast<std::size_t>(k) + 1].allFinite())
      throw IntegrationDivergedError("state integration diverged", k + 1);
  }
  return x;
}

}  // namespace detail

/// Explicit forward Euler on the relaxed vector field:
/// x_{k+1} = x_k + dt * sum_i w_i(k) f(x_k, u_i(k)), x_0 given.
inline StateTrajectory integrate_state_forward(const Problem& problem, const RelaxedMixture& mu,
                                               const TimeGrid& grid, const Vector& x0) {
  if (mu.grid() != grid) throw GridMismatchError("integrate_state_forward: mixture grid mismatch");
  if (x0.size() != problem.state_dim())
    throw std::invalid_argument("integrate_state_forward: x0 dimension mismatch");
  auto field = [&](int k, const Vector& x) {
    Vector dx = Vector::Zero(x.size());
    for (const RelaxedMixture::Atom& a : mu.atoms())
      dx += a.weight[k] * problem.dynamics(x, a.control.at(k));
    return dx;
  };
  return StateTrajectory{grid, detail::euler_forward(grid, x0, field)};
}

/// Ordinary-control fast path; bitwise identical to integrating dirac(u).
inline StateTrajectory integrate_state_forward(const Problem& problem, const OrdinaryControl& u,
                                               const TimeGrid& grid, const Vector& x0) {
  if (u.grid != grid) throw GridMismatchError("integrate_state_forward: control grid mismatch");
  auto field = [&](int k, const Vector& x) { return problem.dynamics(x, u.at(k)); };
  return StateTrajectory{grid, detail::euler_forward(grid, x0, field)};
}

/// Backward sweep of the discrete adjoint of the forward scheme:
/// p_N = grad phi(x_N), and for k = N-1..0
///   p_k = p_{k+1} + dt * sum_i w_i(k) [ (df/dx)' p_{k+1} + (dL/dx)' ]
/// with the Jacobian and gradient evaluated at (x_k, u_i(k)). This is the
/// exact transpose of the forward linearization, so discrete directional
/// derivatives of the cost match Hamiltonian differences evaluated with
/// p_{k+1} (see optimality_theta).
inline CostateTrajectory integrate_costate_backward(const Problem& problem,
                                                    const RelaxedMixture& mu,
                                                    const StateTrajectory& x) {
  if (mu.grid() != x.grid) throw GridMismatchError("integrate_costate_backward: grid mismatch");
  const TimeGrid& grid = x.grid;
  const int n = grid.n_steps();
  const double dt = grid.dt();

  std::vector<Vector> p(static_cast<std::size_t>(n) + 1);
  p[static_cast<std::size_t>(n)] = problem.terminal_cost_grad(x.at(n));
  if (!p[static_cast<std::size_t>(n)].allFinite())
    throw IntegrationDivergedError("costate integration diverged", n);
  for (int k = n - 1; k >= 0; --k) {
    const Vector& pk1 = p[static_cast<std::size_t>(k) + 1];
    Vector dp = Vector::Zero(problem.state_dim());
    for (const RelaxedMixture::Atom& a : mu.atoms()) {
      const Vector& u = a.control.at(k);
      dp += a.weight[k] * (problem.dynamics_jac_x(x.at(k), u).transpose() * pk1 +
                           problem.running_cost_grad_x(x.at(k), u));
    }
    p[static_cast<std::size_t>(k)] = pk1 + dt * dp;
    if (!p[static_cast<std::size_t>(k)].allFinite())
      throw IntegrationDivergedError("costate integration diverged", k);
  }
  return CostateTrajectory{grid, std::move(p)};
}

/// Left-endpoint Riemann quadrature of the relaxed running cost plus the
/// terminal cost: sum_k dt * sum_i w_i(k) L(x_k, u_i(k)) + phi(x_N).
inline double evaluate_cost(const Problem& problem, const RelaxedMixture& mu,
                            const StateTrajectory& x) {
  if (mu.grid() != x.grid) throw GridMismatchError("evaluate_cost: grid mismatch");
  const double dt = x.grid.dt();
  double j = 0.0;
  for (int k = 0; k < x.grid.n_steps(); ++k) {
    double rate = 0.0;
    for (const RelaxedMixture::Atom& a : mu.atoms())
      rate += a.weight[k] * problem.running_cost(x.at(k), a.control.at(k));
    j += dt * rate;
  }
  return j + problem.terminal_cost(x.at(x.grid.n_steps()));
}

/// Ordinary-control overload; bitwise identical to evaluating dirac(u).
inline double evaluate_cost(const Problem& problem, const OrdinaryControl& u,
                            const StateTrajectory& x) {
  if (u.grid != x.grid) throw GridMismatchError("evaluate_cost: grid mismatch");
  const double dt = x.grid.dt();
  double j = 0.0;
  for (int k = 0; k < x.grid.n_steps(); ++k) j += dt * problem.running_cost(x.at(k), u.at(k));
  return j + problem.terminal_cost(x.at(x.grid.n_steps()));
}

/// Cost of an ordinary control from scratch (integrate, then accumulate).
inline double cost_of_control(const Problem& problem, const OrdinaryControl& u) {
  const StateTrajectory x =
      integrate_state_forward(problem, u, u.grid, problem.initial_state());
  return evaluate_cost(problem, u, x);
}

/// Cost of a mixture from scratch.
inline double cost_of_mixture(const Problem& problem, const RelaxedMixture& mu) {
  const StateTrajectory x =
      integrate_state_forward(problem, mu, mu.grid(), problem.initial_state());
  return evaluate_cost(problem, mu, x);
}

}  // namespace hamopt
