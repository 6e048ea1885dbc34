#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hamopt/control.hpp"
#include "hamopt/integrate.hpp"
#include "hamopt/problem.hpp"
#include "hamopt/types.hpp"

namespace hamopt {

/// Descent-iteration parameters. alpha/beta/eta live in (0,1); the defaults
/// sit centrally in those intervals.
struct SolverConfig {
  double alpha = 0.3;        // sufficient-decrease fraction
  double beta = 0.5;         // step-size shrink factor
  double eta = 0.9;          // Hamiltonian-gap fraction of the direction
  int max_iters = 100;
  int l_max = 40;            // largest Armijo exponent tried
  double theta_tol = 1e-8;   // |theta| convergence threshold
  double weight_floor = 1e-9;

  void validate() const {
    auto in01 = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in01(alpha) || !in01(beta) || !in01(eta))
      throw std::invalid_argument("SolverConfig: alpha, beta, eta must lie in (0,1)");
    if (max_iters < 0 || l_max < 0) throw std::invalid_argument("SolverConfig: negative budget");
    if (theta_tol < 0.0) throw std::invalid_argument("SolverConfig: theta_tol must be >= 0");
    if (weight_floor < 0.0 || weight_floor > 0.01)
      throw std::invalid_argument("SolverConfig: weight_floor outside [0, 0.01]");
  }
};

/// Which update rule Step 4 uses.
///  - General: measure convex combination; atoms may accumulate.
///  - Convexified: pointwise control combination on conv(U); requires
///    dynamics affine in u, cost convex in u, and a single-atom iterate.
enum class SolverMode { General, Convexified };

enum class StopReason { MaxIters, ThetaTol, ArmijoStall };

inline std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::MaxIters: return "max-iters";
    case StopReason::ThetaTol: return "theta-tol";
    case StopReason::ArmijoStall: return "armijo-stall";
  }
  return "?";
}

/// Per-iteration log entry.
struct IterationRecord {
  int k = 0;               // 1-based iteration index
  double J = 0.0;          // cost after the accepted update
  double theta = 0.0;      // optimality value driving the step (<= 0)
  double lambda = 0.0;     // accepted step size beta^l
  int l = 0;               // accepted Armijo exponent
  int n_cost_evals = 0;    // cost evaluations spent in the line search
  double wall_ms = 0.0;    // informational only
};

/// Optimality function value and the minimizing ordinary control.
///
/// u*_k minimizes H(x_k, ., p_{k+1}) on each cell; theta is the integrated
/// Hamiltonian gap sum_k dt (H(x_k, u*_k, p_{k+1}) - H(x_k, mu_k, p_{k+1})).
/// Pairing cell k with p_{k+1} matches the discrete adjoint, so theta equals
/// the one-sided derivative of the cost toward dirac(u*). theta is clamped to
/// <= 0; round-off may produce values up to ~1e-12 before the clamp.
struct ThetaResult {
  double theta;
  OrdinaryControl u_star;
};

inline ThetaResult optimality_theta(const Problem& problem, const RelaxedMixture& mu,
                                    const StateTrajectory& x, const CostateTrajectory& p) {
  if (mu.grid() != x.grid || mu.grid() != p.grid)
    throw GridMismatchError("optimality_theta: grid mismatch");
  const TimeGrid& grid = mu.grid();
  OrdinaryControl u_star{grid, std::vector<Vector>(static_cast<std::size_t>(grid.n_steps()))};
  double theta = 0.0;
  for (int k = 0; k < grid.n_steps(); ++k) {
    const Vector& pk = p.at(k + 1);
    u_star.at(k) = problem.hamiltonian_minimizer(x.at(k), pk);
    const double h_min = hamiltonian(problem, x.at(k), u_star.at(k), pk);
    const double h_mu = relaxed_hamiltonian(problem, x.at(k), mixture_slice(mu, k), pk);
    theta += grid.dt() * (h_min - h_mu);
  }
  return {std::min(theta, 0.0), std::move(u_star)};
}

/// Analytic one-sided derivative of J along nu - mu versus a forward
/// difference at lambda_small, both on the fixed grid. The two agree to
/// first order in lambda_small; callers compare them as a discretization
/// self-check.
struct DerivativeCheck {
  double analytic;
  double finite_diff;
  double rel_error() const {
    const double denom = std::max(std::abs(analytic), 1e-300);
    return std::abs(analytic - finite_diff) / denom;
  }
};

inline DerivativeCheck directional_derivative_check(const Problem& problem,
                                                    const RelaxedMixture& mu,
                                                    const RelaxedMixture& nu,
                                                    double lambda_small) {
  if (lambda_small <= 0.0 || lambda_small > 1e-3)
    throw std::invalid_argument("directional_derivative_check: lambda_small outside (0, 1e-3]");
  const TimeGrid& grid = mu.grid();
  const StateTrajectory x = integrate_state_forward(problem, mu, grid, problem.initial_state());
  const CostateTrajectory p = integrate_costate_backward(problem, mu, x);

  double analytic = 0.0;
  for (int k = 0; k < grid.n_steps(); ++k) {
    const Vector& pk = p.at(k + 1);
    analytic += grid.dt() * (relaxed_hamiltonian(problem, x.at(k), mixture_slice(nu, k), pk) -
                             relaxed_hamiltonian(problem, x.at(k), mixture_slice(mu, k), pk));
  }

  const double j0 = evaluate_cost(problem, mu, x);
  const RelaxedMixture perturbed = convex_combine_measures(mu, nu, lambda_small);
  const double j1 = cost_of_mixture(problem, perturbed);
  return {analytic, (j1 - j0) / lambda_small};
}

/// Outcome of the Armijo search. When no exponent up to l_max satisfies the
/// sufficient-decrease test the search reports a stall instead of a step;
/// drivers treat a stall as converged-at-tolerance.
struct ArmijoResult {
  bool stalled = false;
  int l = 0;
  double lambda = 0.0;
  double J_next = 0.0;
  int n_cost_evals = 0;
};

namespace detail {

// Candidate map shared by the line search and the accepted update. The
// compression hook keeps the same mean field at no larger cost, so the
// sufficient-decrease certificate is preserved.
inline RelaxedMixture step_candidate(const Problem& problem, const RelaxedMixture& mu,
                                     const RelaxedMixture& nu, double lambda, SolverMode mode) {
  if (mode == SolverMode::Convexified) {
    return dirac(convex_combine_controls(mu.atom(0).control, nu.atom(0).control, lambda));
  }
  return problem.compress_mixture(convex_combine_measures(mu, nu, lambda));
}

}  // namespace detail

/// Smallest l in {0..l_max} with
///   J(candidate(beta^l)) - J(mu) <= alpha beta^l eta theta.
inline ArmijoResult armijo_step(const Problem& problem, const RelaxedMixture& mu,
                                const RelaxedMixture& nu, double theta, double J_mu,
                                const SolverConfig& config, SolverMode mode) {
  if (!(theta < 0.0)) throw std::invalid_argument("armijo_step: requires theta < 0");
  ArmijoResult res;
  double lambda = 1.0;
  for (int l = 0; l <= config.l_max; ++l, lambda *= config.beta) {
    const RelaxedMixture cand = detail::step_candidate(problem, mu, nu, lambda, mode);
    const double j = cost_of_mixture(problem, cand);
    ++res.n_cost_evals;
    if (j - J_mu <= config.alpha * lambda * config.eta * theta) {
      res.l = l;
      res.lambda = lambda;
      res.J_next = j;
      return res;
    }
  }
  res.stalled = true;
  return res;
}

/// Result of one descent iteration.
struct IterateResult {
  RelaxedMixture mu_next;
  IterationRecord record;
  bool converged = false;      // |theta| <= theta_tol, mu returned unchanged
  bool armijo_stalled = false; // no admissible step; mu returned unchanged
};

/// One iteration of the Hamiltonian-descent step:
/// integrate state and costate, form theta and the minimizing control u*,
/// take nu = dirac(u*) (an eta-minimizer for any eta < 1 since its gap equals
/// theta), Armijo line search, then the mode's convex-combination update
/// followed by pruning.
inline IterateResult iterate(const Problem& problem, const RelaxedMixture& mu,
                             const SolverConfig& config, SolverMode mode) {
  config.validate();
  if (mode == SolverMode::Convexified) {
    if (!(problem.affine_in_control() && problem.convex_cost_in_control()))
      throw std::invalid_argument("iterate: convexified mode needs affine dynamics + convex cost");
    if (!mu.single_atom())
      throw std::invalid_argument("iterate: convexified mode needs a single-atom mixture");
  }

  const auto t_start = std::chrono::steady_clock::now();
  const TimeGrid& grid = mu.grid();
  const StateTrajectory x = integrate_state_forward(problem, mu, grid, problem.initial_state());
  const CostateTrajectory p = integrate_costate_backward(problem, mu, x);
  auto [theta, u_star] = optimality_theta(problem, mu, x, p);

  IterateResult out{mu, IterationRecord{}, false, false};
  out.record.theta = theta;
  if (std::abs(theta) <= config.theta_tol) {
    out.converged = true;
    return out;
  }

  const double J_mu = evaluate_cost(problem, mu, x);
  const RelaxedMixture nu = dirac(u_star);
  const ArmijoResult armijo = armijo_step(problem, mu, nu, theta, J_mu, config, mode);
  if (armijo.stalled) {
    out.armijo_stalled = true;
    out.record.n_cost_evals = armijo.n_cost_evals;
    return out;
  }

  RelaxedMixture next = detail::step_candidate(problem, mu, nu, armijo.lambda, mode);
  next = prune_and_merge(next, config.weight_floor);

  const auto t_end = std::chrono::steady_clock::now();
  out.mu_next = std::move(next);
  out.record.J = armijo.J_next;
  out.record.lambda = armijo.lambda;
  out.record.l = armijo.l;
  out.record.n_cost_evals = armijo.n_cost_evals;
  out.record.wall_ms = std::chrono::duration<double, std::milli>(t_end - t_start).count();
  return out;
}

/// Full run outcome.
struct RunResult {
  RelaxedMixture mu_final;
  double J_initial = 0.0;
  std::vector<IterationRecord> records;
  StopReason stop = StopReason::MaxIters;

  double J_final() const { return records.empty() ? J_initial : records.back().J; }
};

/// Applies `iterate` until the iteration budget, |theta| convergence, or an
/// Armijo stall. Records one entry per accepted iteration; the cost sequence
/// is non-increasing.
inline RunResult run(const Problem& problem, const RelaxedMixture& mu0,
                     const SolverConfig& config, SolverMode mode) {
  config.validate();
  RunResult result{mu0, cost_of_mixture(problem, mu0), {}, StopReason::MaxIters};
  for (int k = 1; k <= config.max_iters; ++k) {
    IterateResult step = iterate(problem, result.mu_final, config, mode);
    if (step.converged) {
      result.stop = StopReason::ThetaTol;
      return result;
    }
    if (step.armijo_stalled) {
      result.stop = StopReason::ArmijoStall;
      return result;
    }
    step.record.k = k;
    result.records.push_back(step.record);
    result.mu_final = std::move(step.mu_next);
  }
  result.stop = StopReason::MaxIters;
  return result;
}

}  // namespace hamopt
