#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hamopt/control.hpp"
#include "hamopt/types.hpp"

namespace hamopt {

/// Description of the admissible control set U and its convex hull.
///
/// Three shapes cover the supported problem class:
///  - Box: U = conv(U) = a coordinate box.
///  - FiniteSet: scalar U = {points...}; conv(U) = [min, max]. The stored
///    order is the PWM block enumeration order.
///  - ModeAmplitude: U = {1..n_modes} x [amp_lo, amp_hi]; controls are pairs
///    (mode index, amplitude).
class ControlHull {
 public:
  enum class Kind { Box, FiniteSet, ModeAmplitude };

  static ControlHull box(Vector lo, Vector hi) {
    ControlHull h;
    h.kind_ = Kind::Box;
    h.lo_ = std::move(lo);
    h.hi_ = std::move(hi);
    return h;
  }

  static ControlHull finite_set(std::vector<double> points) {
    ControlHull h;
    h.kind_ = Kind::FiniteSet;
    h.points_ = std::move(points);
    return h;
  }

  static ControlHull mode_amplitude(int n_modes, double amp_lo, double amp_hi) {
    ControlHull h;
    h.kind_ = Kind::ModeAmplitude;
    h.n_modes_ = n_modes;
    h.lo_ = Vector::Constant(1, amp_lo);
    h.hi_ = Vector::Constant(1, amp_hi);
    return h;
  }

  Kind kind() const { return kind_; }
  const Vector& box_lo() const { return lo_; }
  const Vector& box_hi() const { return hi_; }
  const std::vector<double>& points() const { return points_; }
  int n_modes() const { return n_modes_; }
  double amplitude_lo() const { return lo_[0]; }
  double amplitude_hi() const { return hi_[0]; }

  /// Membership of u in conv(U) within tol.
  bool contains(const Vector& u, double tol) const {
    switch (kind_) {
      case Kind::Box:
        for (int i = 0; i < u.size(); ++i) {
          if (u[i] < lo_[i] - tol || u[i] > hi_[i] + tol) return false;
        }
        return true;
      case Kind::FiniteSet: {
        const auto [lo, hi] = std::minmax_element(points_.begin(), points_.end());
        return u.size() == 1 && u[0] >= *lo - tol && u[0] <= *hi + tol;
      }
      case Kind::ModeAmplitude: {
        if (u.size() != 2) return false;
        const double mode = u[0];
        const double rounded = std::round(mode);
        if (std::abs(mode - rounded) > tol) return false;
        if (rounded < 1.0 - tol || rounded > n_modes_ + tol) return false;
        return u[1] >= lo_[0] - tol && u[1] <= hi_[0] + tol;
      }
    }
    return false;
  }

 private:
  Kind kind_ = Kind::Box;
  Vector lo_, hi_;
  std::vector<double> points_;
  int n_modes_ = 0;
};

/// Contract satisfied by every optimal-control problem instance: dynamics and
/// running cost with their x-derivatives, optional terminal cost, the control
/// hull, and a closed-form pointwise Hamiltonian minimizer over U.
///
/// Instances are immutable after construction and all calls are reentrant.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;

  virtual Vector dynamics(const Vector& x, const Vector& u) const = 0;
  virtual Matrix dynamics_jac_x(const Vector& x, const Vector& u) const = 0;
  virtual double running_cost(const Vector& x, const Vector& u) const = 0;
  virtual Vector running_cost_grad_x(const Vector& x, const Vector& u) const = 0;

  virtual double terminal_cost(const Vector& /*x*/) const { return 0.0; }
  virtual Vector terminal_cost_grad(const Vector& /*x*/) const {
    return Vector::Zero(state_dim());
  }

  /// argmin over U of H(x, u, p). Returns a point of U, never an interior
  /// hull point; ties are resolved by a documented per-problem rule.
  virtual Vector hamiltonian_minimizer(const Vector& x, const Vector& p) const = 0;

  virtual const ControlHull& control_hull() const = 0;
  virtual bool affine_in_control() const = 0;
  virtual bool convex_cost_in_control() const = 0;

  virtual Vector initial_state() const = 0;
  virtual double horizon() const = 0;

  /// The experiment's standard starting control on this grid.
  virtual OrdinaryControl default_initial_control(const TimeGrid& grid) const = 0;

  /// Conservative bound on |L| over the benchmark operating envelope, used to
  /// bound the cost perturbation of weight pruning.
  virtual double running_cost_bound() const = 0;

  /// Rewrites a mixture into a representation with the identical per-cell
  /// mean vector field and a running cost no larger than the input's.
  /// Problems with structure that admits such compressions (e.g. a
  /// mode/amplitude product set whose dynamics are linear and whose cost is
  /// quadratic in the amplitude) override this; the default keeps the mixture
  /// unchanged.
  virtual RelaxedMixture compress_mixture(RelaxedMixture mu) const { return mu; }

  /// Sampling box for randomized diagnostics (states are drawn from
  /// [x_lo, x_hi], costates from [-p_mag, p_mag] per coordinate).
  virtual void diagnostic_ranges(Vector& x_lo, Vector& x_hi, double& p_mag) const = 0;
};

/// The pointwise Hamiltonian H(x, u, p) = p' f(x, u) + L(x, u).
inline double hamiltonian(const Problem& problem, const Vector& x, const Vector& u,
                          const Vector& p) {
  return p.dot(problem.dynamics(x, u)) + problem.running_cost(x, u);
}

/// One weighted support point of a mixture at a fixed cell.
struct WeightedControlPoint {
  double weight;
  Vector u;
};

/// The mixture's support at cell k, as (weight, control value) pairs.
inline std::vector<WeightedControlPoint> mixture_slice(const RelaxedMixture& mu, int k) {
  std::vector<WeightedControlPoint> slice;
  slice.reserve(static_cast<std::size_t>(mu.n_atoms()));
  for (const RelaxedMixture::Atom& a : mu.atoms()) slice.push_back({a.weight[k], a.control.at(k)});
  return slice;
}

/// Relaxed Hamiltonian: the weight-averaged pointwise Hamiltonian over a
/// mixture slice.
inline double relaxed_hamiltonian(const Problem& problem, const Vector& x,
                                  const std::vector<WeightedControlPoint>& slice,
                                  const Vector& p) {
  double h = 0.0;
  for (const WeightedControlPoint& wp : slice) h += wp.weight * hamiltonian(problem, x, wp.u, p);
  return h;
}

}  // namespace hamopt
