#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "hamopt/types.hpp"

namespace hamopt {

/// Piecewise-constant control path: one sample u_k per grid cell, held over
/// [t_k, t_{k+1}). `allow_infeasible` marks paths that intentionally leave
/// the control hull (some experiments start from such a guess).
struct OrdinaryControl {
  TimeGrid grid;
  std::vector<Vector> values;  // length grid.n_steps()
  bool allow_infeasible = false;

  int n_cells() const { return static_cast<int>(values.size()); }
  const Vector& at(int k) const { return values[static_cast<std::size_t>(k)]; }
  Vector& at(int k) { return values[static_cast<std::size_t>(k)]; }

  static OrdinaryControl constant(const TimeGrid& grid, const Vector& u) {
    return OrdinaryControl{grid, std::vector<Vector>(static_cast<std::size_t>(grid.n_steps()), u)};
  }
};

/// Returns true when the two control paths agree within `tol` at every cell.
inline bool pointwise_equal(const OrdinaryControl& a, const OrdinaryControl& b, double tol) {
  if (a.grid != b.grid) return false;
  for (int k = 0; k < a.n_cells(); ++k) {
    if ((a.at(k) - b.at(k)).lpNorm<Eigen::Infinity>() > tol) return false;
  }
  return true;
}

/// Finite convex mixture of ordinary controls on one shared grid.
///
/// Each atom carries a per-cell weight path; per cell the weights are
/// non-negative and sum to one. Most mixtures use constant weight paths (the
/// measure update takes global convex combinations), but problems may supply
/// cheaper same-field representations whose weights vary along the horizon
/// (see Problem::compress_mixture), so the cell-wise form is the common
/// denominator. Atom order is insertion order; runs are deterministic.
class RelaxedMixture {
 public:
  struct Atom {
    Vector weight;  // length n_steps, one weight per cell
    OrdinaryControl control;

    double weight_at(int k) const { return weight[k]; }
    double max_weight() const { return weight.maxCoeff(); }
  };

  RelaxedMixture(TimeGrid grid, std::vector<Atom> atoms)
      : grid_(std::move(grid)), atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw std::invalid_argument("RelaxedMixture: needs at least one atom");
    for (const Atom& a : atoms_) {
      if (a.control.grid != grid_) throw GridMismatchError("RelaxedMixture: atom grid mismatch");
      if (a.weight.size() != grid_.n_steps())
        throw std::invalid_argument("RelaxedMixture: weight path length mismatch");
    }
  }

  const TimeGrid& grid() const { return grid_; }
  int n_atoms() const { return static_cast<int>(atoms_.size()); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::vector<Atom>& atoms() { return atoms_; }
  const Atom& atom(int i) const { return atoms_[static_cast<std::size_t>(i)]; }

  bool single_atom() const { return atoms_.size() == 1; }

  /// Largest deviation of any per-cell weight sum from one.
  double weight_sum_error() const {
    double err = 0.0;
    for (int k = 0; k < grid_.n_steps(); ++k) {
      double s = 0.0;
      for (const Atom& a : atoms_) s += a.weight[k];
      err = std::max(err, std::abs(s - 1.0));
    }
    return err;
  }

  /// Divides every weight path by the per-cell total.
  void renormalize() {
    for (int k = 0; k < grid_.n_steps(); ++k) {
      double s = 0.0;
      for (const Atom& a : atoms_) s += a.weight[k];
      if (s <= 0.0) throw std::invalid_argument("RelaxedMixture: zero total weight at a cell");
      for (Atom& a : atoms_) a.weight[k] /= s;
    }
  }

  /// Cell-wise mean control sum_i w_i(k) u_i(k). For problems whose dynamics
  /// are affine in u this collapses the mixture without changing the state
  /// trajectory.
  OrdinaryControl mean_control() const {
    OrdinaryControl mean{grid_, std::vector<Vector>(static_cast<std::size_t>(grid_.n_steps()))};
    const int m = atoms_.front().control.at(0).size();
    for (int k = 0; k < grid_.n_steps(); ++k) {
      Vector u = Vector::Zero(m);
      for (const Atom& a : atoms_) u += a.weight[k] * a.control.at(k);
      mean.at(k) = std::move(u);
    }
    return mean;
  }

 private:
  TimeGrid grid_;
  std::vector<Atom> atoms_;
};

/// Embeds an ordinary control as the one-atom mixture concentrated on it.
inline RelaxedMixture dirac(const OrdinaryControl& u) {
  RelaxedMixture::Atom atom{Vector::Ones(u.grid.n_steps()), u};
  return RelaxedMixture(u.grid, {std::move(atom)});
}

/// Drops atoms whose weight never exceeds `weight_floor`, merges atoms whose
/// controls are pointwise equal within 1e-12, and renormalizes. If every atom
/// sits below the floor the heaviest one is kept; the result is never empty.
inline RelaxedMixture prune_and_merge(const RelaxedMixture& mu, double weight_floor) {
  if (weight_floor < 0.0 || weight_floor > 0.01)
    throw std::invalid_argument("prune_and_merge: weight_floor outside [0, 0.01]");

  std::vector<RelaxedMixture::Atom> kept;
  for (const RelaxedMixture::Atom& a : mu.atoms()) {
    if (a.max_weight() < weight_floor || a.max_weight() == 0.0) continue;
    bool merged = false;
    for (RelaxedMixture::Atom& b : kept) {
      if (pointwise_equal(a.control, b.control, 1e-12)) {
        b.weight += a.weight;
        merged = true;
        break;
      }
    }
    if (!merged) kept.push_back(a);
  }
  if (kept.empty()) {
    const auto heaviest = std::max_element(
        mu.atoms().begin(), mu.atoms().end(),
        [](const auto& a, const auto& b) { return a.max_weight() < b.max_weight(); });
    kept.push_back(*heaviest);
  }
  RelaxedMixture out(mu.grid(), std::move(kept));
  out.renormalize();
  return out;
}

/// Convex combination (1 - lambda) mu + lambda nu in the sense of measures:
/// the atom lists are concatenated with rescaled weights. Exact-zero-weight
/// atoms are dropped and pointwise-equal controls merged before the result is
/// renormalized.
inline RelaxedMixture convex_combine_measures(const RelaxedMixture& mu, const RelaxedMixture& nu,
                                              double lambda) {
  if (mu.grid() != nu.grid())
    throw GridMismatchError("convex_combine_measures: operands on different grids");
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("convex_combine_measures: lambda outside [0, 1]");

  std::vector<RelaxedMixture::Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(mu.n_atoms() + nu.n_atoms()));
  for (const RelaxedMixture::Atom& a : mu.atoms())
    atoms.push_back({(1.0 - lambda) * a.weight, a.control});
  for (const RelaxedMixture::Atom& a : nu.atoms())
    atoms.push_back({lambda * a.weight, a.control});
  RelaxedMixture combined(mu.grid(), std::move(atoms));
  return prune_and_merge(combined, 0.0);
}

/// Pointwise convex combination u + lambda (v - u) of two hull-valued
/// controls. Valid as a measure update only for problems whose dynamics are
/// affine in u; the result then stays inside the hull when the inputs do.
inline OrdinaryControl convex_combine_controls(const OrdinaryControl& u, const OrdinaryControl& v,
                                               double lambda) {
  if (u.grid != v.grid)
    throw GridMismatchError("convex_combine_controls: operands on different grids");
  if (lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("convex_combine_controls: lambda outside [0, 1]");
  OrdinaryControl out{u.grid, std::vector<Vector>(static_cast<std::size_t>(u.n_cells()))};
  for (int k = 0; k < u.n_cells(); ++k) out.at(k) = u.at(k) + lambda * (v.at(k) - u.at(k));
  return out;
}

}  // namespace hamopt
