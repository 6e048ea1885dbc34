#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hamopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when a state or costate integration produces a non-finite value.
class IntegrationDivergedError : public std::runtime_error {
 public:
  IntegrationDivergedError(const std::string& what_arg, int step)
      : std::runtime_error(what_arg + " at step " + std::to_string(step)), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Thrown when two objects that must share a time grid do not.
class GridMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a control handed to the PWM projector leaves the control hull.
class InfeasibleInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform discretization of [0, t_f] with n_steps cells of width dt.
///
/// Instants are t_k = k*dt for k = 0..n_steps, with the final instant snapped
/// to t_f exactly. Controls live on cells (one sample per cell, zero-order
/// hold); state and costate trajectories live on instants.
class TimeGrid {
 public:
  TimeGrid(double t_f, double dt) : t_f_(t_f), dt_(dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
    if (!(t_f > 0.0)) throw std::invalid_argument("TimeGrid: t_f must be positive");
    n_steps_ = static_cast<int>(std::llround(t_f / dt));
    if (n_steps_ < 1) throw std::invalid_argument("TimeGrid: horizon shorter than one step");
    if (std::abs(n_steps_ * dt - t_f) > 1e-9 * std::max(t_f, 1.0))
      throw std::invalid_argument("TimeGrid: t_f is not an integer multiple of dt");
  }

  double t_f() const { return t_f_; }
  double dt() const { return dt_; }
  int n_steps() const { return n_steps_; }

  /// t_k for k = 0..n_steps; the last instant is exactly t_f.
  double instant(int k) const { return k == n_steps_ ? t_f_ : k * dt_; }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.t_f_ == b.t_f_ && a.dt_ == b.dt_ && a.n_steps_ == b.n_steps_;
  }
  friend bool operator!=(const TimeGrid& a, const TimeGrid& b) { return !(a == b); }

 private:
  double t_f_;
  double dt_;
  int n_steps_;
};

/// State samples x_k on the instants of a grid (n_steps + 1 entries).
struct StateTrajectory {
  TimeGrid grid;
  std::vector<Vector> values;

  int size() const { return static_cast<int>(values.size()); }
  const Vector& at(int k) const { return values[static_cast<std::size_t>(k)]; }
  const Vector& front() const { return values.front(); }
  const Vector& back() const { return values.back(); }
};

/// Costate samples p_k on the instants of a grid (n_steps + 1 entries).
/// The last entry is the terminal-cost gradient at x(t_f) (zero when the
/// problem has no terminal cost).
struct CostateTrajectory {
  TimeGrid grid;
  std::vector<Vector> values;

  int size() const { return static_cast<int>(values.size()); }
  const Vector& at(int k) const { return values[static_cast<std::size_t>(k)]; }
  const Vector& back() const { return values.back(); }
};

}  // namespace hamopt
