#pragma once

#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "hamopt/problems/double_tank.hpp"
#include "hamopt/problems/hybrid_lqr.hpp"
#include "hamopt/problems/mobile_network.hpp"

namespace hamopt::problems {

class UnknownProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline Vector parse_vector(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

/// Benchmark selection by name. `overrides` (N, d, C, ubar, x0) apply to the
/// mobile network only; other problems take none.
inline std::shared_ptr<const Problem> make_problem(
    const std::string& name, const std::map<std::string, std::string>& overrides = {}) {
  if (name == "double-tank") return std::make_shared<DoubleTank>();
  if (name == "hybrid-lqr") return std::make_shared<HybridLqr>();
  if (name == "mobile-network") {
    MobileNetwork::Params params;
    if (auto it = overrides.find("N"); it != overrides.end()) {
      params.n_agents = std::stoi(it->second);
      params.x0 = Vector::Zero(params.n_agents);  // placeholder until x0 arrives
    }
    if (auto it = overrides.find("d"); it != overrides.end()) params.span = std::stod(it->second);
    if (auto it = overrides.find("C"); it != overrides.end())
      params.fuel_weight = std::stod(it->second);
    if (auto it = overrides.find("ubar"); it != overrides.end())
      params.u_max = std::stod(it->second);
    if (auto it = overrides.find("x0"); it != overrides.end()) params.x0 = parse_vector(it->second);
    return std::make_shared<MobileNetwork>(params);
  }
  throw UnknownProblemError("unknown problem: " + name);
}

}  // namespace hamopt::problems
