#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hamopt/csv.hpp"
#include "hamopt/problems/factory.hpp"
#include "hamopt/solver.hpp"

using namespace hamopt;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("mixture dump round-trips exactly") {
  const auto lqr = problems::make_problem("hybrid-lqr");
  const TimeGrid g(lqr->horizon(), 0.01);
  SolverConfig config;
  config.max_iters = 5;
  const RunResult res = run(*lqr, dirac(lqr->default_initial_control(g)), config,
                            SolverMode::General);
  const std::string path = temp_path("mixture_roundtrip.csv");
  csv::write_mixture(path, res.mu_final);

  const RelaxedMixture back = csv::read_mixture(path);
  REQUIRE(back.n_atoms() == res.mu_final.n_atoms());
  CHECK(std::abs(back.grid().dt() - g.dt()) <= 1e-15);
  CHECK(std::abs(back.grid().t_f() - g.t_f()) <= 1e-15 * g.t_f());
  for (int a = 0; a < back.n_atoms(); ++a) {
    for (int k = 0; k < g.n_steps(); ++k) {
      CHECK(back.atom(a).weight[k] == res.mu_final.atom(a).weight[k]);
      CHECK((back.atom(a).control.at(k) - res.mu_final.atom(a).control.at(k))
                .lpNorm<Eigen::Infinity>() == 0.0);
    }
  }
}

TEST_CASE("trajectory dump carries state and costate columns") {
  const auto tank = problems::make_problem("double-tank");
  const TimeGrid g(tank->horizon(), 0.1);
  const RelaxedMixture mu = dirac(tank->default_initial_control(g));
  const StateTrajectory x = integrate_state_forward(*tank, mu, g, tank->initial_state());
  const CostateTrajectory p = integrate_costate_backward(*tank, mu, x);

  const std::string path = temp_path("trajectory_dump.csv");
  csv::write_trajectory(path, x, &p);
  std::ifstream is(path);
  std::string header;
  REQUIRE(std::getline(is, header));
  CHECK(header == "t,x1,x2,p1,p2");
  int rows = 0;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == g.n_steps() + 1);
}

TEST_CASE("iteration log matches the schema") {
  std::vector<IterationRecord> records(2);
  records[0] = {1, 10.5, -3.25, 1.0, 0, 1, 12.0};
  records[1] = {2, 9.75, -1.5, 0.25, 2, 3, 11.0};
  const std::string path = temp_path("iterations_dump.csv");
  csv::write_iterations(path, records);
  std::ifstream is(path);
  std::string header;
  REQUIRE(std::getline(is, header));
  CHECK(header == "k,J,theta,lambda,l,n_cost_evals,wall_ms");
  std::string row;
  REQUIRE(std::getline(is, row));
  CHECK(row.rfind("1,10.5,-3.25,1,0,1,", 0) == 0);
}

TEST_CASE("writers are deterministic") {
  const auto tank = problems::make_problem("double-tank");
  const TimeGrid g(tank->horizon(), 0.1);
  const RelaxedMixture mu = dirac(tank->default_initial_control(g));
  const std::string a = temp_path("det_a.csv");
  const std::string b = temp_path("det_b.csv");
  csv::write_mixture(a, mu);
  csv::write_mixture(b, mu);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("full-precision formatting survives a parse") {
  const double v = 4.744035982112953;  // arbitrary non-representable decimal
  CHECK(std::stod(csv::format(v)) == v);
  CHECK(std::stod(csv::format(1.0 / 3.0)) == 1.0 / 3.0);
}
