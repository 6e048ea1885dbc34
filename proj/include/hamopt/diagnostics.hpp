#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hamopt/problem.hpp"
#include "hamopt/types.hpp"

namespace hamopt {

struct CheckItem {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct ConsistencyReport {
  std::vector<CheckItem> items;

  bool all_passed() const {
    for (const CheckItem& c : items)
      if (!c.passed) return false;
    return true;
  }

  std::string to_string() const {
    std::ostringstream os;
    for (const CheckItem& c : items) {
      os << (c.passed ? "  ok   " : "  FAIL ") << c.name << "  measured " << c.measured
         << "  tol " << c.tolerance << '\n';
    }
    return os.str();
  }
};

namespace detail {

inline Vector random_state(const Problem& problem, std::mt19937_64& rng) {
  Vector lo, hi;
  double p_mag;
  problem.diagnostic_ranges(lo, hi, p_mag);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector x(problem.state_dim());
  for (int i = 0; i < x.size(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
  return x;
}

inline Vector random_costate(const Problem& problem, std::mt19937_64& rng) {
  Vector lo, hi;
  double p_mag;
  problem.diagnostic_ranges(lo, hi, p_mag);
  std::uniform_real_distribution<double> sym(-p_mag, p_mag);
  Vector p(problem.state_dim());
  for (int i = 0; i < p.size(); ++i) p[i] = sym(rng);
  return p;
}

/// Random point of U (not merely conv(U)).
inline Vector random_u_point(const ControlHull& hull, int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  switch (hull.kind()) {
    case ControlHull::Kind::Box: {
      Vector u(dim);
      for (int i = 0; i < dim; ++i)
        u[i] = hull.box_lo()[i] + (hull.box_hi()[i] - hull.box_lo()[i]) * unit(rng);
      return u;
    }
    case ControlHull::Kind::FiniteSet: {
      std::uniform_int_distribution<std::size_t> pick(0, hull.points().size() - 1);
      return Vector::Constant(1, hull.points()[pick(rng)]);
    }
    case ControlHull::Kind::ModeAmplitude: {
      std::uniform_int_distribution<int> pick(1, hull.n_modes());
      Vector u(2);
      u[0] = pick(rng);
      u[1] = hull.amplitude_lo() + (hull.amplitude_hi() - hull.amplitude_lo()) * unit(rng);
      return u;
    }
  }
  throw std::logic_error("random_u_point: unknown hull kind");
}

/// Candidate U-points searched by the brute-force Hamiltonian oracle:
/// the whole set for finite sets, modes x amplitude grid for products, and
/// the {lo, 0, hi} coordinate lattice for boxes (which contains the minimizer
/// whenever the Hamiltonian is separable and piecewise linear per
/// coordinate).
inline std::vector<Vector> oracle_candidates(const ControlHull& hull, int dim, int grid_n) {
  std::vector<Vector> cands;
  switch (hull.kind()) {
    case ControlHull::Kind::FiniteSet:
      for (double p : hull.points()) cands.push_back(Vector::Constant(1, p));
      break;
    case ControlHull::Kind::ModeAmplitude: {
      const double lo = hull.amplitude_lo(), hi = hull.amplitude_hi();
      for (int mode = 1; mode <= hull.n_modes(); ++mode) {
        for (int g = 0; g < grid_n; ++g) {
          Vector u(2);
          u[0] = mode;
          u[1] = lo + (hi - lo) * g / (grid_n - 1);
          cands.push_back(u);
        }
      }
      break;
    }
    case ControlHull::Kind::Box: {
      std::vector<std::vector<double>> per_coord(static_cast<std::size_t>(dim));
      for (int i = 0; i < dim; ++i) {
        per_coord[static_cast<std::size_t>(i)] = {hull.box_lo()[i], hull.box_hi()[i]};
        if (hull.box_lo()[i] < 0.0 && hull.box_hi()[i] > 0.0)
          per_coord[static_cast<std::size_t>(i)].push_back(0.0);
      }
      std::vector<Vector> acc{Vector(0)};
      for (int i = 0; i < dim; ++i) {
        std::vector<Vector> next;
        for (const Vector& head : acc) {
          for (double v : per_coord[static_cast<std::size_t>(i)]) {
            Vector u(head.size() + 1);
            u.head(head.size()) = head;
            u[head.size()] = v;
            next.push_back(std::move(u));
          }
        }
        acc = std::move(next);
        if (acc.size() > 100000) throw std::invalid_argument("oracle_candidates: box too large");
      }
      cands = std::move(acc);
      break;
    }
  }
  return cands;
}

}  // namespace detail

/// Randomized validation of a problem definition: central-difference checks
/// of the three supplied derivatives and a brute-force check that the
/// closed-form Hamiltonian minimizer is no worse than every oracle candidate.
/// Reports every violation; never throws on a failed check.
inline ConsistencyReport check_problem_consistency(const Problem& problem, int trials,
                                                   unsigned seed) {
  constexpr double kFdStep = 1e-6;
  constexpr double kFdTol = 1e-4;   // relative, scaled by max(1, |analytic|)
  constexpr double kMinTol = 1e-8;  // slack for the minimizer comparison
  std::mt19937_64 rng(seed);
  ConsistencyReport report;

  double worst_fx = 0.0, worst_lx = 0.0, worst_phix = 0.0, worst_min = 0.0;
  const std::vector<Vector> cands =
      detail::oracle_candidates(problem.control_hull(), problem.control_dim(), 401);

  for (int t = 0; t < trials; ++t) {
    const Vector x = detail::random_state(problem, rng);
    const Vector p = detail::random_costate(problem, rng);
    const Vector u = detail::random_u_point(problem.control_hull(), problem.control_dim(), rng);

    // df/dx vs central differences
    const Matrix jac = problem.dynamics_jac_x(x, u);
    Matrix jac_fd(problem.state_dim(), problem.state_dim());
    for (int i = 0; i < problem.state_dim(); ++i) {
      Vector xp = x, xm = x;
      xp[i] += kFdStep;
      xm[i] -= kFdStep;
      jac_fd.col(i) = (problem.dynamics(xp, u) - problem.dynamics(xm, u)) / (2.0 * kFdStep);
    }
    worst_fx = std::max(worst_fx, (jac - jac_fd).cwiseAbs().maxCoeff() /
                                      std::max(1.0, jac.cwiseAbs().maxCoeff()));

    // dL/dx vs central differences
    const Vector lx = problem.running_cost_grad_x(x, u);
    Vector lx_fd(problem.state_dim());
    for (int i = 0; i < problem.state_dim(); ++i) {
      Vector xp = x, xm = x;
      xp[i] += kFdStep;
      xm[i] -= kFdStep;
      lx_fd[i] = (problem.running_cost(xp, u) - problem.running_cost(xm, u)) / (2.0 * kFdStep);
    }
    worst_lx = std::max(worst_lx, (lx - lx_fd).lpNorm<Eigen::Infinity>() /
                                      std::max(1.0, lx.lpNorm<Eigen::Infinity>()));

    // grad phi vs central differences
    const Vector phix = problem.terminal_cost_grad(x);
    Vector phix_fd(problem.state_dim());
    for (int i = 0; i < problem.state_dim(); ++i) {
      Vector xp = x, xm = x;
      xp[i] += kFdStep;
      xm[i] -= kFdStep;
      phix_fd[i] = (problem.terminal_cost(xp) - problem.terminal_cost(xm)) / (2.0 * kFdStep);
    }
    worst_phix = std::max(worst_phix, (phix - phix_fd).lpNorm<Eigen::Infinity>() /
                                          std::max(1.0, phix.lpNorm<Eigen::Infinity>()));

    // closed-form minimizer vs brute force
    const Vector u_star = problem.hamiltonian_minimizer(x, p);
    const double h_star = hamiltonian(problem, x, u_star, p);
    double h_best = h_star;
    for (const Vector& cand : cands) h_best = std::min(h_best, hamiltonian(problem, x, cand, p));
    worst_min = std::max(worst_min, h_star - h_best);
  }

  report.items.push_back({"dynamics_jac_x vs central differences", worst_fx, kFdTol,
                          worst_fx <= kFdTol});
  report.items.push_back({"running_cost_grad_x vs central differences", worst_lx, kFdTol,
                          worst_lx <= kFdTol});
  report.items.push_back({"terminal_cost_grad vs central differences", worst_phix, kFdTol,
                          worst_phix <= kFdTol});
  report.items.push_back({"hamiltonian_minimizer vs brute-force oracle", worst_min, kMinTol,
                          worst_min <= kMinTol});
  return report;
}

}  // namespace hamopt
