#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hamopt/control.hpp"
#include "hamopt/solver.hpp"
#include "hamopt/types.hpp"

namespace hamopt::csv {

/// Full-precision double formatting (17 significant digits round-trips).
inline std::string format(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void open_or_throw(std::ofstream& os, const std::string& path) {
  os.open(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
}

/// Trajectory dump: `t,x1..xn[,p1..pn]`, one row per grid instant.
inline void write_trajectory(const std::string& path, const StateTrajectory& x,
                             const CostateTrajectory* p = nullptr) {
  std::ofstream os;
  open_or_throw(os, path);
  const int n_state = static_cast<int>(x.front().size());
  os << "t";
  for (int i = 1; i <= n_state; ++i) os << ",x" << i;
  if (p) {
    for (int i = 1; i <= n_state; ++i) os << ",p" << i;
  }
  os << '\n';
  for (int k = 0; k <= x.grid.n_steps(); ++k) {
    os << format(x.grid.instant(k));
    for (int i = 0; i < n_state; ++i) os << ',' << format(x.at(k)[i]);
    if (p) {
      for (int i = 0; i < n_state; ++i) os << ',' << format(p->at(k)[i]);
    }
    os << '\n';
  }
}

/// Control dump: `t,atom_index,weight,u1..um`, one row per (instant, atom).
/// Instants are the cell left endpoints.
inline void write_mixture(const std::string& path, const RelaxedMixture& mu) {
  std::ofstream os;
  open_or_throw(os, path);
  const int m = static_cast<int>(mu.atom(0).control.at(0).size());
  os << "t,atom_index,weight";
  for (int i = 1; i <= m; ++i) os << ",u" << i;
  os << '\n';
  for (int k = 0; k < mu.grid().n_steps(); ++k) {
    for (int a = 0; a < mu.n_atoms(); ++a) {
      os << format(mu.grid().instant(k)) << ',' << a << ','
         << format(mu.atom(a).weight[k]);
      for (int i = 0; i < m; ++i) os << ',' << format(mu.atom(a).control.at(k)[i]);
      os << '\n';
    }
  }
}

inline void write_control(const std::string& path, const OrdinaryControl& u) {
  write_mixture(path, dirac(u));
}

/// Iteration log: `k,J,theta,lambda,l,n_cost_evals,wall_ms`.
inline void write_iterations(const std::string& path, const std::vector<IterationRecord>& records) {
  std::ofstream os;
  open_or_throw(os, path);
  os << "k,J,theta,lambda,l,n_cost_evals,wall_ms\n";
  for (const IterationRecord& r : records) {
    os << r.k << ',' << format(r.J) << ',' << format(r.theta) << ',' << format(r.lambda) << ','
       << r.l << ',' << r.n_cost_evals << ',' << format(r.wall_ms) << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace detail

/// Reads a control dump back into a mixture. The grid is reconstructed from
/// the instant column (uniform spacing assumed, horizon = last instant + dt).
inline RelaxedMixture read_mixture(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty control dump: " + path);
  const auto header = detail::split(line);
  if (header.size() < 4 || header[0] != "t" || header[1] != "atom_index" || header[2] != "weight")
    throw std::runtime_error("unexpected control-dump header in " + path);
  const int m = static_cast<int>(header.size()) - 3;

  std::vector<double> instants;
  std::vector<std::vector<double>> weights;          // [atom][cell]
  std::vector<std::vector<Vector>> values;           // [atom][cell]
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split(line);
    if (static_cast<int>(cells.size()) != 3 + m)
      throw std::runtime_error("ragged control-dump row in " + path);
    const double t = std::stod(cells[0]);
    const std::size_t atom = static_cast<std::size_t>(std::stoul(cells[1]));
    if (atom >= weights.size()) {
      weights.resize(atom + 1);
      values.resize(atom + 1);
    }
    if (atom == 0) instants.push_back(t);
    weights[atom].push_back(std::stod(cells[2]));
    Vector u(m);
    for (int i = 0; i < m; ++i) u[i] = std::stod(cells[static_cast<std::size_t>(3 + i)]);
    values[atom].push_back(std::move(u));
  }
  if (instants.size() < 2)
    throw std::runtime_error("control dump too short to infer the grid: " + path);
  const double dt = instants[1] - instants[0];
  const TimeGrid grid(dt * static_cast<double>(instants.size()), dt);

  std::vector<RelaxedMixture::Atom> atoms;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    if (weights[a].size() != instants.size())
      throw std::runtime_error("atom rows mismatch in " + path);
    RelaxedMixture::Atom atom{Vector(static_cast<Eigen::Index>(instants.size())),
                              OrdinaryControl{grid, values[a]}};
    for (std::size_t k = 0; k < weights[a].size(); ++k)
      atom.weight[static_cast<Eigen::Index>(k)] = weights[a][k];
    atoms.push_back(std::move(atom));
  }
  return RelaxedMixture(grid, std::move(atoms));
}

}  // namespace hamopt::csv
