#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "hamopt/problems/factory.hpp"
#include "hamopt/solver.hpp"

using namespace hamopt;

namespace {

struct Prepared {
  RelaxedMixture mu;
  StateTrajectory x;
  CostateTrajectory p;
};

Prepared prepare(const Problem& problem, const RelaxedMixture& mu) {
  StateTrajectory x =
      integrate_state_forward(problem, mu, mu.grid(), problem.initial_state());
  CostateTrajectory p = integrate_costate_backward(problem, mu, x);
  return {mu, std::move(x), std::move(p)};
}

}  // namespace

TEST_CASE("theta vanishes on an already-minimizing control") {
  // equally spaced relay agents at rest: zero costate, zero minimizer
  problems::MobileNetwork::Params params;
  params.x0 = (Vector(6) << 20.0 / 7, 40.0 / 7, 60.0 / 7, 80.0 / 7, 100.0 / 7, 120.0 / 7)
                  .finished();
  const problems::MobileNetwork net(params);
  const TimeGrid g(net.horizon(), 0.1);
  const auto [mu, x, p] = prepare(net, dirac(OrdinaryControl::constant(g, Vector::Zero(6))));
  const ThetaResult th = optimality_theta(net, mu, x, p);
  CHECK(th.theta == 0.0);
  for (int k = 0; k < g.n_steps(); ++k) CHECK(th.u_star.at(k).isZero(0.0));
}

TEST_CASE("theta is strictly negative away from stationarity") {
  const auto tank = problems::make_problem("double-tank");
  const TimeGrid g(tank->horizon(), 0.01);
  const auto [mu, x, p] = prepare(*tank, dirac(tank->default_initial_control(g)));
  const ThetaResult th = optimality_theta(*tank, mu, x, p);
  CHECK(th.theta < 0.0);

  // independent re-summation of the integrand
  double resum = 0.0;
  for (int k = 0; k < g.n_steps(); ++k) {
    const Vector& pk = p.at(k + 1);
    const double h_min = hamiltonian(*tank, x.at(k), th.u_star.at(k), pk);
    const double h_mu = hamiltonian(*tank, x.at(k), mu.atom(0).control.at(k), pk);
    resum += g.dt() * (h_min - h_mu);
  }
  CHECK(th.theta == Catch::Approx(resum).epsilon(1e-12));
}

TEST_CASE("regulator direction minimizes the Hamiltonian cell by cell") {
  const problems::HybridLqr lqr;
  const TimeGrid g(lqr.horizon(), 0.01);
  const auto [mu, x, p] = prepare(lqr, dirac(lqr.default_initial_control(g)));
  const ThetaResult th = optimality_theta(lqr, mu, x, p);
  for (int k = 0; k < g.n_steps(); ++k) {
    const double h_star = hamiltonian(lqr, x.at(k), th.u_star.at(k), p.at(k + 1));
    for (int mode = 1; mode <= 3; ++mode) {
      for (int gi = 0; gi <= 40; ++gi) {  // coarse grid; the 401-point one runs in test_problems
        const double v = -20.0 + gi * 1.0;
        REQUIRE(h_star <=
                hamiltonian(lqr, x.at(k), (Vector(2) << mode, v).finished(), p.at(k + 1)) + 1e-8);
      }
    }
  }
}

TEST_CASE("directional derivative check") {
  SECTION("direction equal to the base point gives zero on both routes") {
    const auto tank = problems::make_problem("double-tank");
    const TimeGrid g(tank->horizon(), 0.05);
    const RelaxedMixture mu = dirac(tank->default_initial_control(g));
    const DerivativeCheck dd = directional_derivative_check(*tank, mu, mu, 1e-4);
    CHECK(dd.analytic == 0.0);
    CHECK(std::abs(dd.finite_diff) <= 1e-9);
  }
  SECTION("analytic matches finite differences within 1% on all benchmarks") {
    for (const char* name : {"double-tank", "hybrid-lqr", "mobile-network"}) {
      const auto problem = problems::make_problem(name);
      const TimeGrid g(problem->horizon(), 0.01);
      const auto [mu, x, p] = prepare(*problem, dirac(problem->default_initial_control(g)));
      const ThetaResult th = optimality_theta(*problem, mu, x, p);
      const DerivativeCheck dd = directional_derivative_check(*problem, mu, dirac(th.u_star), 1e-4);
      INFO(name << ": analytic " << dd.analytic << " fd " << dd.finite_diff);
      CHECK(dd.rel_error() <= 0.01);
    }
  }
  SECTION("rejects an out-of-range probe step") {
    const auto tank = problems::make_problem("double-tank");
    const TimeGrid g(tank->horizon(), 0.1);
    const RelaxedMixture mu = dirac(tank->default_initial_control(g));
    CHECK_THROWS_AS(directional_derivative_check(*tank, mu, mu, 1e-2), std::invalid_argument);
  }
}

TEST_CASE("armijo accepts the minimal exponent") {
  const auto tank = problems::make_problem("double-tank");
  const TimeGrid g(tank->horizon(), 0.01);
  const SolverConfig config;
  const auto [mu, x, p] = prepare(*tank, dirac(tank->default_initial_control(g)));
  const ThetaResult th = optimality_theta(*tank, mu, x, p);
  const double J_mu = evaluate_cost(*tank, mu, x);
  const RelaxedMixture nu = dirac(th.u_star);

  const ArmijoResult res =
      armijo_step(*tank, mu, nu, th.theta, J_mu, config, SolverMode::Convexified);
  REQUIRE_FALSE(res.stalled);
  CHECK(res.lambda == std::pow(config.beta, res.l));
  CHECK(res.n_cost_evals == res.l + 1);

  // sufficient-descent certificate
  CHECK(res.J_next - J_mu <= config.alpha * res.lambda * config.eta * th.theta);

  // re-evaluation oracle: the accepted cost reproduces, and l-1 fails
  const OrdinaryControl cand = convex_combine_controls(mu.atom(0).control, nu.atom(0).control,
                                                       res.lambda);
  CHECK(cost_of_control(*tank, cand) == res.J_next);
  if (res.l > 0) {
    const double lam_prev = std::pow(config.beta, res.l - 1);
    const OrdinaryControl prev =
        convex_combine_controls(mu.atom(0).control, nu.atom(0).control, lam_prev);
    CHECK(cost_of_control(*tank, prev) - J_mu > config.alpha * lam_prev * config.eta * th.theta);
  }

  // the full step from this starting point passes the test outright
  CHECK(res.l == 0);
  CHECK(res.lambda == 1.0);
}

TEST_CASE("armijo stalls when no exponent works") {
  const problems::HybridLqr lqr;
  const TimeGrid g(lqr.horizon(), 0.01);
  SolverConfig config;
  config.l_max = 0;  // only the full step, which overshoots badly here
  const auto [mu, x, p] = prepare(lqr, dirac(lqr.default_initial_control(g)));
  const ThetaResult th = optimality_theta(lqr, mu, x, p);
  const double J_mu = evaluate_cost(lqr, mu, x);
  const ArmijoResult res =
      armijo_step(lqr, mu, dirac(th.u_star), th.theta, J_mu, config, SolverMode::General);
  CHECK(res.stalled);

  SolverConfig full;
  full.max_iters = 5;
  full.l_max = 0;
  const RunResult rr = run(lqr, mu, full, SolverMode::General);
  CHECK(rr.stop == StopReason::ArmijoStall);
  CHECK(rr.records.empty());
}

TEST_CASE("iterate honors the convergence exit") {
  problems::MobileNetwork::Params params;
  params.x0 = (Vector(6) << 20.0 / 7, 40.0 / 7, 60.0 / 7, 80.0 / 7, 100.0 / 7, 120.0 / 7)
                  .finished();
  const problems::MobileNetwork net(params);
  const TimeGrid g(net.horizon(), 0.1);
  const RelaxedMixture mu = dirac(OrdinaryControl::constant(g, Vector::Zero(6)));
  const IterateResult res = iterate(net, mu, SolverConfig{}, SolverMode::Convexified);
  CHECK(res.converged);
  CHECK(res.mu_next.n_atoms() == 1);
  CHECK(pointwise_equal(res.mu_next.atom(0).control, mu.atom(0).control, 0.0));
}

TEST_CASE("convexified iterates stay single-atom") {
  const auto tank = problems::make_problem("double-tank");
  const TimeGrid g(tank->horizon(), 0.05);
  RelaxedMixture mu = dirac(tank->default_initial_control(g));
  for (int k = 0; k < 5; ++k) {
    const IterateResult res = iterate(*tank, mu, SolverConfig{}, SolverMode::Convexified);
    REQUIRE_FALSE(res.armijo_stalled);
    if (res.converged) break;
    CHECK(res.mu_next.single_atom());
    mu = res.mu_next;
  }
}

TEST_CASE("convexified mode preconditions") {
  const auto lqr = problems::make_problem("hybrid-lqr");
  const TimeGrid g(lqr->horizon(), 0.1);
  const RelaxedMixture mu = dirac(lqr->default_initial_control(g));
  CHECK_THROWS_AS(iterate(*lqr, mu, SolverConfig{}, SolverMode::Convexified),
                  std::invalid_argument);

  const auto tank = problems::make_problem("double-tank");
  const TimeGrid gt(tank->horizon(), 0.1);
  const OrdinaryControl u1 = OrdinaryControl::constant(gt, Vector::Constant(1, 1.0));
  const OrdinaryControl u2 = OrdinaryControl::constant(gt, Vector::Constant(1, 2.0));
  const RelaxedMixture two = convex_combine_measures(dirac(u1), dirac(u2), 0.5);
  CHECK_THROWS_AS(iterate(*tank, two, SolverConfig{}, SolverMode::Convexified),
                  std::invalid_argument);
}

TEST_CASE("general mode grows the regulator mixture by at most one atom per iteration") {
  const auto lqr = problems::make_problem("hybrid-lqr");
  const TimeGrid g(lqr->horizon(), 0.01);
  RelaxedMixture mu = dirac(lqr->default_initial_control(g));
  SolverConfig config;
  int prev = mu.n_atoms();
  for (int k = 0; k < 6; ++k) {
    const IterateResult res = iterate(*lqr, mu, config, SolverMode::General);
    REQUIRE_FALSE(res.converged);
    REQUIRE_FALSE(res.armijo_stalled);
    CHECK(res.mu_next.n_atoms() <= prev + 1);
    CHECK(res.mu_next.weight_sum_error() <= 1e-12);
    prev = res.mu_next.n_atoms();
    mu = res.mu_next;
  }
}

TEST_CASE("zero iteration budget returns the start point") {
  const auto tank = problems::make_problem("double-tank");
  const TimeGrid g(tank->horizon(), 0.1);
  const RelaxedMixture mu0 = dirac(tank->default_initial_control(g));
  SolverConfig config;
  config.max_iters = 0;
  const RunResult res = run(*tank, mu0, config, SolverMode::Convexified);
  CHECK(res.records.empty());
  CHECK(res.J_final() == res.J_initial);
  CHECK(pointwise_equal(res.mu_final.atom(0).control, mu0.atom(0).control, 0.0));
}

TEST_CASE("run produces a monotone certified descent") {
  const auto tank = problems::make_problem("double-tank");
  const TimeGrid g(tank->horizon(), 0.05);
  SolverConfig config;
  config.max_iters = 30;
  const RunResult res = run(*tank, dirac(tank->default_initial_control(g)), config,
                            SolverMode::Convexified);
  REQUIRE_FALSE(res.records.empty());
  double prev = res.J_initial;
  for (const IterationRecord& r : res.records) {
    CHECK(r.theta <= 0.0);
    CHECK(r.lambda > 0.0);
    CHECK(r.lambda <= 1.0);
    CHECK(r.J <= prev);
    CHECK(r.J - prev <= config.alpha * r.lambda * config.eta * r.theta);
    prev = r.J;
  }
  CHECK(res.J_final() < res.J_initial);
}

TEST_CASE("solver config validation") {
  SolverConfig bad;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = SolverConfig{};
  bad.beta = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = SolverConfig{};
  bad.eta = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = SolverConfig{};
  bad.weight_floor = 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("regulator compression preserves the mean field and lowers the cost") {
  const problems::HybridLqr lqr;
  const TimeGrid g(lqr.horizon(), 0.05);
  const int n = g.n_steps();

  OrdinaryControl a{g, {}}, b{g, {}};
  for (int k = 0; k < n; ++k) {
    a.values.push_back((Vector(2) << 1.0 + (k % 3), 5.0 * std::sin(0.3 * k)).finished());
    b.values.push_back((Vector(2) << 1.0 + ((k + 1) % 3), -3.0 + 0.05 * k).finished());
  }
  RelaxedMixture mu(g, {{Vector::Constant(n, 0.6), a}, {Vector::Constant(n, 0.4), b}});
  const RelaxedMixture compressed = lqr.compress_mixture(mu);

  CHECK(compressed.weight_sum_error() <= 1e-12);
  for (int k = 0; k < n; ++k) {
    Vector field_in = Vector::Zero(3), field_out = Vector::Zero(3);
    const Vector x = Vector::Zero(3);
    for (const auto& atom : mu.atoms()) field_in += atom.weight[k] * lqr.dynamics(x, atom.control.at(k));
    for (const auto& atom : compressed.atoms())
      field_out += atom.weight[k] * lqr.dynamics(x, atom.control.at(k));
    REQUIRE((field_in - field_out).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  CHECK(cost_of_mixture(lqr, compressed) <= cost_of_mixture(lqr, mu) + 1e-12);
}
