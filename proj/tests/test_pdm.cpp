#include <doctest.h>

#include <cmath>
#include <random>

#include "popdyn/closedloop.hpp"
#include "popdyn/pdm.hpp"
#include "test_util.hpp"

using namespace popdyn;

TEST_SUITE_BEGIN("pdm");

TEST_CASE("filter derivative at and away from its equilibrium") {
  PopulationGame g = congestion_example();

  PdmModel smoothing = smoothing_pdm(g, 1.0);
  SimplexState u = uniform_state(3);
  PdmState q_eq(g.payoff_fn(u.entries));
  Vec zero = pdm_derivative(smoothing, q_eq, u);
  for (double v : zero) CHECK(std::abs(v) < 1e-15);

  PdmModel fast = smoothing_pdm(g, 2.0);
  SimplexState vertex({1.0, 0.0, 0.0}, 1.0);
  Vec d = pdm_derivative(fast, PdmState(Vec(3, 0.0)), vertex);
  CHECK(d[0] == doctest::Approx(-6.0));
  CHECK(d[1] == doctest::Approx(0.0));
  CHECK(d[2] == doctest::Approx(-2.0));

  Mat zero_m(3, Vec(3, 0.0));
  PopulationGame ones = affine_game(zero_m, {1.0, 1.0, 1.0});
  PdmModel filt = smoothing_pdm(ones, 1.0);
  Vec d2 = pdm_derivative(filt, PdmState({1.0, 1.0, 1.0}), uniform_state(3));
  for (double v : d2) CHECK(v == 0.0);
}

TEST_CASE("output of the three special cases") {
  PopulationGame g = congestion_example();
  SimplexState u({0.2, 0.3, 0.5}, 1.0);
  Vec f = g.payoff_fn(u.entries);

  PdmModel mem = memoryless_pdm(g);
  PayoffVector p = pdm_output(mem, PdmState({9.0, 9.0, 9.0}), u);
  for (int i = 0; i < 3; i++) CHECK(p[i] == f[static_cast<size_t>(i)]);

  PdmModel ant = anticipatory_pdm(g, 1.0, 5.0);
  PayoffVector pa = pdm_output(ant, PdmState(f), u);
  for (int i = 0; i < 3; i++) CHECK(pa[i] == doctest::Approx(f[static_cast<size_t>(i)]));

  PdmModel smo = smoothing_pdm(g, 1.0);
  PayoffVector ps = pdm_output(smo, PdmState({7.0, 7.0, 7.0}), u);
  for (int i = 0; i < 3; i++) CHECK(ps[i] == doctest::Approx(7.0));
}

TEST_CASE("stationary game is the base game for every kind") {
  PopulationGame g1 = congestion_example();
  PopulationGame g2 = demand_response_example();
  CHECK(stationary_game(memoryless_pdm(g1)).name == "congestion_example");
  CHECK(stationary_game(smoothing_pdm(g2, 1.0)).name == "demand_response_example");
  CHECK(stationary_game(anticipatory_pdm(g1, 1.0, 5.0)).name == "congestion_example");
}

TEST_CASE("parameter validation") {
  PopulationGame g = congestion_example();
  CHECK_THROWS_AS(smoothing_pdm(g, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(anticipatory_pdm(g, 1.0, -2.0), std::invalid_argument);
  CHECK_THROWS_AS(general_pdm(g, 1.0, 0.6, 0.5, 0.0), std::invalid_argument);
  CHECK_NOTHROW(general_pdm(g, 2.0, 0.25, 0.75, 1.5));
}

TEST_CASE("output identity between the blended and substituted forms") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  PopulationGame g = congestion_example();
  PdmModel pdm = general_pdm(g, 1.7, 0.3, 0.7, 0.9);
  for (int k = 0; k < 200; k++) {
    SimplexState u = testutil::random_simplex(rng, 3);
    Vec q(3);
    for (auto& x : q) x = unif(rng);
    PdmState qs(q);
    Vec f = g.payoff_fn(u.entries);
    Vec qdot = pdm_derivative(pdm, qs, u);
    PayoffVector p = pdm_output(pdm, qs, u);
    for (int i = 0; i < 3; i++) {
      auto iu = static_cast<size_t>(i);
      double blended = pdm.mu0 * f[iu] + pdm.mu1 * q[iu] + pdm.mu2 * qdot[iu];
      CHECK(std::abs(blended - p[i]) < 1e-13);
    }
  }
}

TEST_CASE("state stays within the filter bound along closed-loop runs") {
  PopulationGame g = demand_response_example();
  double fmax = max_payoff_norm(g, 200);
  Protocol smith = smith_protocol(3);
  PdmModel pdm = smoothing_pdm(g, 1.0);
  PdmState q0(Vec{3.0, -3.0, 0.5});
  Trajectory traj = integrate(pdm, smith, SimplexState({1.0, 0.0, 0.0}, 1.0), q0, 30.0, 0.01);
  double bound = fmax + sup_norm(q0.q);
  for (const auto& q : traj.q) CHECK(sup_norm(q) <= bound + 1e-9);
}

TEST_CASE("memoryless stationary response is identically zero") {
  DecayReport rep = stationary_response_check(memoryless_pdm(congestion_example()),
                                              uniform_state(3), 5.0, 0.01);
  CHECK(rep.degenerate);
  CHECK(rep.pass);
  for (double d : rep.deviations) CHECK(d == 0.0);
}

TEST_CASE("smoothing filter decays at its pole rate") {
  DecayReport rep = stationary_response_check(smoothing_pdm(congestion_example(), 1.0),
                                              uniform_state(3), 20.0, 0.01);
  CHECK(rep.pass);
  CHECK(rep.fitted_rate == doctest::Approx(1.0).epsilon(0.05));
  CHECK(rep.deviations.back() < 1e-6);
  CHECK_FALSE(rep.output_on_manifold);
}

TEST_CASE("anticipatory filter decays at the same pole") {
  DecayReport rep = stationary_response_check(anticipatory_pdm(congestion_example(), 1.0, 5.0),
                                              uniform_state(3), 20.0, 0.01);
  CHECK(rep.pass);
  CHECK(rep.fitted_rate == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("stationary response check passes for all kinds over all example games") {
  for (const PopulationGame& g :
       {congestion_example(), demand_response_example(), task_allocation_example()}) {
    for (int kind = 0; kind < 3; kind++) {
      PdmModel pdm = (kind == 0)   ? memoryless_pdm(g)
                     : (kind == 1) ? smoothing_pdm(g, 1.0)
                                   : anticipatory_pdm(g, 1.0, 5.0);
      DecayReport rep = stationary_response_check(pdm, SimplexState({0.5, 0.3, 0.2}, 1.0), 25.0, 0.01);
      CHECK(rep.pass);
    }
  }
}

TEST_SUITE_END();
