#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hamopt/control.hpp"
#include "hamopt/integrate.hpp"
#include "hamopt/problems/double_tank.hpp"

using namespace hamopt;

namespace {

OrdinaryControl const_control(const TimeGrid& g, double v) {
  return OrdinaryControl::constant(g, Vector::Constant(1, v));
}

}  // namespace

TEST_CASE("dirac embeds an ordinary control") {
  const TimeGrid g(1.0, 0.1);
  const OrdinaryControl u = const_control(g, 1.0);
  const RelaxedMixture mu = dirac(u);
  REQUIRE(mu.n_atoms() == 1);
  for (int k = 0; k < g.n_steps(); ++k) CHECK(mu.atom(0).weight[k] == 1.0);
  CHECK(pointwise_equal(mu.mean_control(), u, 0.0));
}

TEST_CASE("dirac cost equals ordinary-control cost") {
  const problems::DoubleTank tank;
  const TimeGrid g(tank.horizon(), 0.05);
  const OrdinaryControl u = const_control(g, 1.0);
  const StateTrajectory x = integrate_state_forward(tank, u, g, tank.initial_state());
  CHECK(evaluate_cost(tank, dirac(u), x) == evaluate_cost(tank, u, x));
}

TEST_CASE("convex_combine_measures endpoint and interior cases") {
  const TimeGrid g(1.0, 0.1);
  const RelaxedMixture mu = dirac(const_control(g, 1.0));
  const RelaxedMixture nu = dirac(const_control(g, 2.0));

  const RelaxedMixture at0 = convex_combine_measures(mu, nu, 0.0);
  REQUIRE(at0.n_atoms() == 1);
  CHECK(pointwise_equal(at0.atom(0).control, mu.atom(0).control, 0.0));

  const RelaxedMixture at1 = convex_combine_measures(mu, nu, 1.0);
  REQUIRE(at1.n_atoms() == 1);
  CHECK(pointwise_equal(at1.atom(0).control, nu.atom(0).control, 0.0));

  const RelaxedMixture mid = convex_combine_measures(mu, nu, 0.25);
  REQUIRE(mid.n_atoms() == 2);
  CHECK(mid.atom(0).weight[0] == Catch::Approx(0.75).margin(1e-15));
  CHECK(mid.atom(1).weight[0] == Catch::Approx(0.25).margin(1e-15));
  CHECK(pointwise_equal(mid.atom(0).control, mu.atom(0).control, 0.0));
  CHECK(pointwise_equal(mid.atom(1).control, nu.atom(0).control, 0.0));
  CHECK(mid.weight_sum_error() <= 1e-12);
}

TEST_CASE("convex_combine_measures rejects grid mismatch") {
  const RelaxedMixture mu = dirac(const_control(TimeGrid(1.0, 0.1), 1.0));
  const RelaxedMixture nu = dirac(const_control(TimeGrid(1.0, 0.05), 2.0));
  CHECK_THROWS_AS(convex_combine_measures(mu, nu, 0.5), GridMismatchError);
}

TEST_CASE("convex_combine_controls is the pointwise combination") {
  const TimeGrid g(1.0, 0.1);
  const OrdinaryControl u = const_control(g, 1.0);
  const OrdinaryControl v = const_control(g, 2.0);
  const OrdinaryControl half = convex_combine_controls(u, v, 0.5);
  for (int k = 0; k < g.n_steps(); ++k) CHECK(half.at(k)[0] == 1.5);
  CHECK(pointwise_equal(convex_combine_controls(u, v, 0.0), u, 0.0));
  CHECK_THROWS_AS(convex_combine_controls(u, const_control(TimeGrid(2.0, 0.1), 2.0), 0.5),
                  GridMismatchError);
}

TEST_CASE("prune_and_merge drops zero weights and merges equal controls") {
  const TimeGrid g(1.0, 0.1);
  const OrdinaryControl u = const_control(g, 1.0);
  const OrdinaryControl v = const_control(g, 2.0);

  {
    RelaxedMixture mixed(g, {{Vector::Ones(g.n_steps()), u}, {Vector::Zero(g.n_steps()), v}});
    const RelaxedMixture pruned = prune_and_merge(mixed, 0.0);
    REQUIRE(pruned.n_atoms() == 1);
    CHECK(pointwise_equal(pruned.atom(0).control, u, 0.0));
    CHECK(pruned.atom(0).weight[0] == 1.0);
  }
  {
    RelaxedMixture dup(g, {{Vector::Constant(g.n_steps(), 0.5), u},
                           {Vector::Constant(g.n_steps(), 0.5), u}});
    const RelaxedMixture merged = prune_and_merge(dup, 0.0);
    REQUIRE(merged.n_atoms() == 1);
    CHECK(merged.atom(0).weight[0] == 1.0);
  }
}

TEST_CASE("prune_and_merge keeps the heaviest atom when all fall below the floor") {
  const TimeGrid g(1.0, 0.1);
  RelaxedMixture tiny(g, {{Vector::Constant(g.n_steps(), 1e-13), const_control(g, 1.0)},
                          {Vector::Constant(g.n_steps(), 5e-13), const_control(g, 2.0)}});
  const RelaxedMixture kept = prune_and_merge(tiny, 1e-9);
  REQUIRE(kept.n_atoms() == 1);
  CHECK(kept.atom(0).control.at(0)[0] == 2.0);
  CHECK(kept.atom(0).weight[0] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("prune_and_merge validates the floor") {
  const RelaxedMixture mu = dirac(const_control(TimeGrid(1.0, 0.1), 1.0));
  CHECK_THROWS_AS(prune_and_merge(mu, -1e-3), std::invalid_argument);
  CHECK_THROWS_AS(prune_and_merge(mu, 0.02), std::invalid_argument);
}

TEST_CASE("repeated measure combinations keep weights a partition of unity") {
  const TimeGrid g(1.0, 0.1);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RelaxedMixture mu = dirac(const_control(g, 1.0));
  for (int it = 0; it < 40; ++it) {
    OrdinaryControl w{g, {}};
    w.values.reserve(static_cast<std::size_t>(g.n_steps()));
    for (int k = 0; k < g.n_steps(); ++k)
      w.values.push_back(Vector::Constant(1, 1.0 + unit(rng)));
    mu = convex_combine_measures(mu, dirac(w), unit(rng));
    mu = prune_and_merge(mu, 1e-9);
    CHECK(mu.weight_sum_error() <= 1e-12);
    for (const RelaxedMixture::Atom& a : mu.atoms()) CHECK(a.weight.minCoeff() >= 0.0);
  }
}

TEST_CASE("quadrature is linear in the measure") {
  // For a fixed trajectory, the cost of a combined mixture equals the
  // weighted sum of the costs of its parts.
  const problems::DoubleTank tank;
  const TimeGrid g(tank.horizon(), 0.1);
  const RelaxedMixture mu = dirac(const_control(g, 1.0));
  const RelaxedMixture nu = dirac(const_control(g, 2.0));
  const StateTrajectory x = integrate_state_forward(tank, mu, g, tank.initial_state());
  for (double lambda : {0.1, 0.35, 0.8}) {
    const RelaxedMixture mix = convex_combine_measures(mu, nu, lambda);
    const double direct = evaluate_cost(tank, mix, x);
    const double split =
        (1.0 - lambda) * evaluate_cost(tank, mu, x) + lambda * evaluate_cost(tank, nu, x);
    CHECK(direct == Catch::Approx(split).epsilon(1e-12));
  }
}
