#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "hamopt/control.hpp"
#include "hamopt/integrate.hpp"
#include "hamopt/problem.hpp"
#include "hamopt/types.hpp"

namespace hamopt {

/// Pulse-width-modulation cycle length, in grid cells. A trailing partial
/// cycle (when n_steps is not a multiple) is modulated over its actual
/// length.
struct PwmConfig {
  int cycle_steps = 1;

  void validate() const {
    if (cycle_steps < 1) throw std::invalid_argument("PwmConfig: cycle_steps must be >= 1");
  }
};

namespace detail {

// Integer duty counts for one cycle. Targets are frac*len plus the running
// quantization carry; the first blocks round, the last absorbs the remainder.
// Carrying the per-point rounding error into the next cycle keeps the
// long-run duty average unbiased even when the fractions are nearly constant
// from cycle to cycle.
inline std::vector<int> duty_counts(const std::vector<double>& fractions, int len,
                                    std::vector<double>& carry) {
  const std::size_t m = fractions.size();
  std::vector<int> counts(m, 0);
  int used = 0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double want = fractions[i] * len + carry[i];
    counts[i] = std::max(0, static_cast<int>(std::lround(want)));
    used += counts[i];
  }
  counts[m - 1] = len - used;
  // repair any negative count by borrowing from the largest one
  while (true) {
    const auto neg = std::min_element(counts.begin(), counts.end());
    if (*neg >= 0) break;
    const auto big = std::max_element(counts.begin(), counts.end());
    *big += *neg;
    *neg = 0;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double want = fractions[i] * len + carry[i];
    carry[i] = want - counts[i];
  }
  return counts;
}

// Block order within a cycle: enumeration order on even cycles, reversed on
// odd ones. Alternating the sweep direction cancels the first-order drift
// that a fixed order accumulates when the duty fractions are slowly varying.
inline std::vector<int> block_order(int cycle_index, int m) {
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  if (cycle_index % 2 == 1) std::reverse(order.begin(), order.end());
  return order;
}

}  // namespace detail

/// Projects a relaxed mixture onto U-valued switching controls by per-cycle
/// duty allocation.
///
/// Every atom value must lie in conv(U) within 1e-9. Per cycle, each U-point
/// (finite-set point, or mode of a mode/amplitude product) receives a
/// contiguous block of cells sized from its share of the cycle-averaged
/// mixture; block amplitudes for product sets are the per-cell weight-averaged
/// amplitudes of the atoms in that mode. Box hulls are their own convex hull,
/// so the projection is the cell-wise mean control.
inline OrdinaryControl project_pwm(const Problem& problem, const RelaxedMixture& mu,
                                   const PwmConfig& cfg) {
  cfg.validate();
  const ControlHull& hull = problem.control_hull();
  const TimeGrid& grid = mu.grid();
  const int n = grid.n_steps();

  for (const RelaxedMixture::Atom& a : mu.atoms()) {
    for (int k = 0; k < n; ++k) {
      if (!hull.contains(a.control.at(k), 1e-9))
        throw InfeasibleInputError("project_pwm: atom value outside conv(U) at cell " +
                                   std::to_string(k));
    }
  }

  if (hull.kind() == ControlHull::Kind::Box) return mu.mean_control();

  OrdinaryControl out{grid, std::vector<Vector>(static_cast<std::size_t>(n))};

  if (hull.kind() == ControlHull::Kind::FiniteSet) {
    const std::vector<double>& pts = hull.points();
    const int m = static_cast<int>(pts.size());
    // value-sorted index for the bracketing decomposition
    std::vector<int> sorted(static_cast<std::size_t>(m));
    std::iota(sorted.begin(), sorted.end(), 0);
    std::sort(sorted.begin(), sorted.end(),
              [&](int a, int b) { return pts[static_cast<std::size_t>(a)] < pts[static_cast<std::size_t>(b)]; });

    std::vector<double> carry(static_cast<std::size_t>(m), 0.0);
    int cycle = 0;
    for (int k0 = 0; k0 < n; k0 += cfg.cycle_steps, ++cycle) {
      const int len = std::min(cfg.cycle_steps, n - k0);
      std::vector<double> mass(static_cast<std::size_t>(m), 0.0);
      for (int k = k0; k < k0 + len; ++k) {
        for (const RelaxedMixture::Atom& a : mu.atoms()) {
          const double v = a.control.at(k)[0];
          // split v over the bracketing pair of set points
          int jlo = sorted.front(), jhi = sorted.back();
          for (std::size_t s = 0; s + 1 < sorted.size(); ++s) {
            const double lo = pts[static_cast<std::size_t>(sorted[s])];
            const double hi = pts[static_cast<std::size_t>(sorted[s + 1])];
            if (v <= hi || s + 2 == sorted.size()) {
              jlo = sorted[s];
              jhi = sorted[s + 1];
              if (v <= hi) break;
            }
          }
          const double lo = pts[static_cast<std::size_t>(jlo)];
          const double hi = pts[static_cast<std::size_t>(jhi)];
          const double t = hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 0.0;
          mass[static_cast<std::size_t>(jhi)] += a.weight[k] * t;
          mass[static_cast<std::size_t>(jlo)] += a.weight[k] * (1.0 - t);
        }
      }
      const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
      std::vector<double> frac(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) frac[static_cast<std::size_t>(i)] = mass[static_cast<std::size_t>(i)] / total;
      const std::vector<int> counts = detail::duty_counts(frac, len, carry);
      int pos = k0;
      for (int i : detail::block_order(cycle, m)) {
        for (int c = 0; c < counts[static_cast<std::size_t>(i)]; ++c, ++pos)
          out.at(pos) = Vector::Constant(1, pts[static_cast<std::size_t>(i)]);
      }
    }
    return out;
  }

  // ModeAmplitude: duty per mode from the cycle mass; amplitude during a
  // mode's block is the cell-wise weighted mean over the atoms in that mode.
  const int m = hull.n_modes();
  std::vector<double> carry(static_cast<std::size_t>(m), 0.0);
  int cycle = 0;
  for (int k0 = 0; k0 < n; k0 += cfg.cycle_steps, ++cycle) {
    const int len = std::min(cfg.cycle_steps, n - k0);
    std::vector<double> mass(static_cast<std::size_t>(m), 0.0);
    std::vector<double> amp_cycle(static_cast<std::size_t>(m), 0.0);
    for (int k = k0; k < k0 + len; ++k) {
      for (const RelaxedMixture::Atom& a : mu.atoms()) {
        const int mode = static_cast<int>(std::lround(a.control.at(k)[0])) - 1;
        mass[static_cast<std::size_t>(mode)] += a.weight[k];
        amp_cycle[static_cast<std::size_t>(mode)] += a.weight[k] * a.control.at(k)[1];
      }
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    std::vector<double> frac(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      frac[static_cast<std::size_t>(i)] = mass[static_cast<std::size_t>(i)] / total;
      amp_cycle[static_cast<std::size_t>(i)] =
          mass[static_cast<std::size_t>(i)] > 0.0 ? amp_cycle[static_cast<std::size_t>(i)] / mass[static_cast<std::size_t>(i)] : 0.0;
    }
    const std::vector<int> counts = detail::duty_counts(frac, len, carry);
    int pos = k0;
    for (int i : detail::block_order(cycle, m)) {
      for (int c = 0; c < counts[static_cast<std::size_t>(i)]; ++c, ++pos) {
        double cell_mass = 0.0, cell_amp = 0.0;
        for (const RelaxedMixture::Atom& a : mu.atoms()) {
          if (static_cast<int>(std::lround(a.control.at(pos)[0])) - 1 == i) {
            cell_mass += a.weight[pos];
            cell_amp += a.weight[pos] * a.control.at(pos)[1];
          }
        }
        const double amp = cell_mass > 0.0 ? cell_amp / cell_mass : amp_cycle[static_cast<std::size_t>(i)];
        out.at(pos) = (Vector(2) << static_cast<double>(i + 1), amp).finished();
      }
    }
  }
  return out;
}

/// Per-cycle fidelity of a projected control against the mixture it came
/// from: the worst cycle-mean deviation per control coordinate (meaningful
/// for affine-in-u problems) and the cost gap.
struct PwmFidelityReport {
  double max_cycle_mean_deviation = 0.0;  // NaN when the problem is not affine in u
  double delta_J = 0.0;                   // J(u_proj) - J(mu)
  int n_cycles = 0;
};

inline PwmFidelityReport pwm_fidelity_report(const Problem& problem, const RelaxedMixture& mu,
                                             const OrdinaryControl& u_proj, const PwmConfig& cfg) {
  cfg.validate();
  if (u_proj.grid != mu.grid()) throw GridMismatchError("pwm_fidelity_report: grid mismatch");
  PwmFidelityReport report;
  const int n = mu.grid().n_steps();
  report.n_cycles = (n + cfg.cycle_steps - 1) / cfg.cycle_steps;

  if (problem.affine_in_control()) {
    const OrdinaryControl mean = mu.mean_control();
    double worst = 0.0;
    for (int k0 = 0; k0 < n; k0 += cfg.cycle_steps) {
      const int len = std::min(cfg.cycle_steps, n - k0);
      Vector avg_proj = Vector::Zero(problem.control_dim());
      Vector avg_mean = Vector::Zero(problem.control_dim());
      for (int k = k0; k < k0 + len; ++k) {
        avg_proj += u_proj.at(k);
        avg_mean += mean.at(k);
      }
      worst = std::max(worst, ((avg_proj - avg_mean) / len).lpNorm<Eigen::Infinity>());
    }
    report.max_cycle_mean_deviation = worst;
  } else {
    report.max_cycle_mean_deviation = std::numeric_limits<double>::quiet_NaN();
  }

  report.delta_J = cost_of_control(problem, u_proj) - cost_of_mixture(problem, mu);
  return report;
}

}  // namespace hamopt
