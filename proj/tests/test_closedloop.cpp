#include <doctest.h>

#include <cmath>
#include <random>

#include "popdyn/closedloop.hpp"
#include "popdyn/passivity.hpp"
#include "test_util.hpp"

using namespace popdyn;

TEST_SUITE_BEGIN("closedloop");

TEST_CASE("bnn over the memoryless congestion game reaches the nash point") {
  // the slow sector of the linearized dynamic decays at rate ~0.035, so the
  // tail needs the full horizon
  Trajectory traj = integrate(memoryless_pdm(congestion_example()), bnn_protocol(3),
                              SimplexState({0.8, 0.1, 0.1}, 1.0), 100.0, 0.01);
  CHECK(sup_norm_diff(traj.x.back(), {4.0 / 11.0, 6.0 / 11.0, 1.0 / 11.0}) < 1e-3);
}

TEST_CASE("equilibrium initial conditions stay put") {
  PopulationGame g = congestion_example();
  SimplexState ne({4.0 / 11.0, 6.0 / 11.0, 1.0 / 11.0}, 1.0);
  Protocol protos[] = {bnn_protocol(3), smith_protocol(3)};
  for (const Protocol& p : protos) {
    Trajectory traj = integrate(memoryless_pdm(g), p, ne, 10.0, 0.01);
    CHECK(sup_norm_diff(traj.x.back(), ne.entries) <= 1e-6);
  }
}

TEST_CASE("smith over the smoothing demand response game converges from a vertex") {
  Trajectory traj = integrate(smoothing_pdm(demand_response_example(), 1.0), smith_protocol(3),
                              SimplexState({1.0, 0.0, 0.0}, 1.0), 50.0, 0.01);
  CHECK(sup_norm_diff(traj.x.back(), {0.15446154, 0.29092308, 0.55461538}) < 1e-3);
}

TEST_CASE("distance to a set of states") {
  EquilibriumSet set;
  set.points.emplace_back(Vec{1.0, 0.0, 0.0}, 1.0);
  set.points.emplace_back(Vec{0.0, 1.0, 0.0}, 1.0);
  CHECK(distance_to_set(SimplexState({1.0, 0.0, 0.0}, 1.0), set) == 0.0);
  CHECK(distance_to_set(SimplexState({0.0, 0.0, 1.0}, 1.0), set) == doctest::Approx(1.0));

  EquilibriumSet ne;
  ne.points.emplace_back(Vec{4.0 / 11.0, 6.0 / 11.0, 1.0 / 11.0}, 1.0);
  double d = distance_to_set(SimplexState({0.5, 0.4, 0.1}, 1.0), ne);
  CHECK(d == doctest::Approx(6.0 / 11.0 - 0.4).epsilon(1e-12));
  CHECK(d == doctest::Approx(0.14545).epsilon(1e-4));

  EquilibriumSet empty;
  CHECK_THROWS_AS(distance_to_set(SimplexState({1.0, 0.0, 0.0}, 1.0), empty),
                  std::invalid_argument);
}

TEST_CASE("memoryless runs have identically zero payoff gap") {
  PopulationGame g = congestion_example();
  EquilibriumSet eq = nash_set(g);
  Trajectory traj = integrate(memoryless_pdm(g), bnn_protocol(3),
                              SimplexState({0.8, 0.1, 0.1}, 1.0), 20.0, 0.01);
  ConvergenceReport rep = convergence_report(traj, eq, g);
  for (double gap : rep.payoff_gap) CHECK(gap == 0.0);
}

TEST_CASE("anticipation damps the transient but wins the tail") {
  // the anticipatory loop is slower into the 1e-2 ball yet ends closer by
  // T = 50; the asymptotic decay is what the derivative action accelerates
  PopulationGame g = congestion_example();
  EquilibriumSet eq = nash_set(g);
  SimplexState x0({0.8, 0.1, 0.1}, 1.0);
  Trajectory mem = integrate(memoryless_pdm(g), bnn_protocol(3), x0, 50.0, 0.01);
  Trajectory ant = integrate(anticipatory_pdm(g, 1.0, 5.0), bnn_protocol(3), x0, 50.0, 0.01);
  ConvergenceReport rm = convergence_report(mem, eq, g);
  ConvergenceReport ra = convergence_report(ant, eq, g);
  CHECK(ra.terminal_dist < rm.terminal_dist);
  CHECK(ra.terminal_dist < 1e-3);
}

TEST_CASE("smoothing payoff gap decays to zero") {
  PopulationGame g = demand_response_example();
  EquilibriumSet eq = nash_set(g);
  Trajectory traj = integrate(smoothing_pdm(g, 1.0), smith_protocol(3),
                              SimplexState({1.0, 0.0, 0.0}, 1.0), 60.0, 0.01);
  ConvergenceReport rep = convergence_report(traj, eq, g);
  CHECK(rep.terminal_gap < 1e-6);
  // the envelope drops by about a decade every five time units once the
  // transient waves are over (threshold read off the run)
  auto gap_at = [&](double t) {
    return rep.payoff_gap[static_cast<size_t>(std::llround(t / traj.h))];
  };
  for (double t : {15.0, 20.0, 25.0, 30.0}) {
    CHECK(gap_at(t + 5.0) < gap_at(t));
    CHECK(gap_at(t) < gap_at(10.0));
  }
}

TEST_CASE("step halving leaves the final state unchanged to fourth order") {
  SimplexState x0({0.7, 0.2, 0.1}, 1.0);
  struct Case {
    PdmModel pdm;
    Protocol protocol;
  };
  Case cases[] = {
      {memoryless_pdm(congestion_example()), bnn_protocol(3)},
      {anticipatory_pdm(congestion_example(), 1.0, 5.0), bnn_protocol(3)},
      {smoothing_pdm(demand_response_example(), 1.0), smith_protocol(3)},
      {memoryless_pdm(task_allocation_example()), logit_protocol(3, 25.0)},
  };
  for (const auto& c : cases) {
    Trajectory coarse = integrate(c.pdm, c.protocol, x0, 20.0, 0.01);
    Trajectory fine = integrate(c.pdm, c.protocol, x0, 20.0, 0.005);
    CHECK(sup_norm_diff(coarse.x.back(), fine.x.back()) <= 1e-6);
  }
}

TEST_CASE("storage plus antistorage decays along certified closed loops") {
  SimplexState x0({0.6, 0.3, 0.1}, 1.0);
  PopulationGame g = congestion_example();

  PdmModel pdm = smoothing_pdm(g, 1.0);
  Trajectory traj = integrate(pdm, bnn_protocol(3), x0, 40.0, 0.01);
  StorageFunction s = bnn_storage(3);
  AntistorageFunction l = certified_affine_antistorage(pdm);
  double prev = 1e300;
  for (int k = 0; k < traj.samples(); k++) {
    auto ku = static_cast<size_t>(k);
    double value = storage_eval(s, SimplexState(traj.x[ku], 1.0), PayoffVector(traj.p[ku])) +
                   antistorage_eval(l, SimplexState(traj.x[ku], 1.0), PdmState(traj.q[ku]));
    if (k > 0) CHECK(value <= prev + 1e-6 * (1.0 + prev));
    prev = value;
  }
}

TEST_CASE("storage decays to zero on theorem-covered configurations") {
  SimplexState x0({0.6, 0.3, 0.1}, 1.0);
  Trajectory traj = integrate(memoryless_pdm(congestion_example()), bnn_protocol(3), x0, 100.0, 0.01);
  StorageFunction s = bnn_storage(3);
  double terminal =
      storage_eval(s, SimplexState(traj.x.back(), 1.0), PayoffVector(traj.p.back()));
  CHECK(terminal < 1e-6);
}

TEST_CASE("projection corrections stay at rounding scale") {
  Trajectory traj = integrate(memoryless_pdm(task_allocation_example()), logit_protocol(3, 0.01),
                              SimplexState({0.5, 0.3, 0.2}, 1.0), 100.0, 0.01);
  CHECK(traj.cumulative_projection_correction < 1e-5);
  CHECK(traj.max_projection_deviation < 1e-7);
}

TEST_CASE("derivative samples are consistent with the stored states") {
  Trajectory traj = integrate(smoothing_pdm(demand_response_example(), 1.0), smith_protocol(3),
                              SimplexState({0.4, 0.35, 0.25}, 1.0), 5.0, 0.01);
  // pdot at interior samples equals the central difference of p
  for (int k = 1; k + 1 < traj.samples(); k += 37) {
    auto ku = static_cast<size_t>(k);
    for (int i = 0; i < 3; i++) {
      auto iu = static_cast<size_t>(i);
      double fd = (traj.p[ku + 1][iu] - traj.p[ku - 1][iu]) / (2.0 * traj.h);
      CHECK(traj.pdot[ku][iu] == doctest::Approx(fd).epsilon(1e-12));
    }
  }
  // xdot sums to zero (tangency) and matches x growth to O(h^2)
  for (int k = 1; k + 1 < traj.samples(); k += 53) {
    auto ku = static_cast<size_t>(k);
    double sum = traj.xdot[ku][0] + traj.xdot[ku][1] + traj.xdot[ku][2];
    CHECK(std::abs(sum) < 1e-9);
    for (int i = 0; i < 3; i++) {
      auto iu = static_cast<size_t>(i);
      double fd = (traj.x[ku + 1][iu] - traj.x[ku - 1][iu]) / (2.0 * traj.h);
      CHECK(std::abs(traj.xdot[ku][iu] - fd) < 2e-3);  // O(h^2) plus sector kinks
    }
  }
}

TEST_CASE("integration rejects bad arguments") {
  PdmModel pdm = memoryless_pdm(congestion_example());
  Protocol p = bnn_protocol(3);
  SimplexState x0 = uniform_state(3);
  CHECK_THROWS_AS(integrate(pdm, p, x0, -1.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(integrate(pdm, p, x0, 1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(integrate(pdm, p, uniform_state(4, 1.0), 1.0, 0.01), std::invalid_argument);
}

TEST_SUITE_END();
