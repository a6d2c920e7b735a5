#pragma once

#include <cstdint>
#include <vector>

#include "popdyn/closedloop.hpp"
#include "popdyn/edm.hpp"
#include "popdyn/pdm.hpp"
#include "popdyn/types.hpp"

namespace popdyn {

// Per-strategy payoff intervals covering a simulation run.
struct PayoffBox {
  Vec lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
};

// Smallest admissible revision-opportunity rate for the protocol over the
// box (times a 1.1 safety factor): the maximum over strategies of the total
// switch rate out of a strategy. PBR rates are row-stochastic, so the bound
// is analytic there.
double choose_rate_bound(const Protocol& protocol, const PayoffBox& box, int box_points_per_axis = 9,
                         int simplex_resolution = 12);

// Record of one finite-N run. Counts on the output grid are always kept;
// the full per-event log (times, counts, payoffs) is optional since bulk
// experiments at large N rho T would not fit in memory.
struct JumpTrajectory {
  int N = 0;
  int n = 0;
  double T = 0.0;
  double output_step = 0.0;
  bool events_recorded = false;

  std::vector<double> event_times;
  std::vector<std::vector<int>> event_counts;
  std::vector<Vec> event_payoffs;

  std::vector<double> grid_times;
  std::vector<std::vector<int>> grid_counts;
  std::vector<Vec> grid_q;

  Vec state_at_grid(int k) const;  // counts / N at grid index k
};

struct JumpSimOptions {
  double output_step = 0.01;
  bool record_events = true;
};

// Uniformized Markov jump process: revision opportunities arrive at rate
// N rho; the revising agent's strategy is drawn from the empirical
// distribution, and it switches to j with probability T_ij / rho. The PDM
// state is integrated by RK4 between jumps with the population frozen.
JumpTrajectory simulate_finite_population(int N, const Protocol& protocol, const PdmModel& pdm,
                                          const SimplexState& x0, const PdmState& q0, double T,
                                          double rho, uint64_t seed,
                                          const JumpSimOptions& opts = {});

// sup over the mean trajectory's grid of the sup-norm distance between the
// (right-continuous, piecewise constant) jump state and the mean state.
double sup_deviation(const JumpTrajectory& jump, const Trajectory& mean);

// Nearest point of (1/N) N^n on the simplex (largest-remainder rounding).
std::vector<int> round_to_count_grid(const SimplexState& x0, int N);

// Payoff box from deterministic pre-runs (from x0 and from inward-pulled
// vertices), inflated about the interval centers.
PayoffBox estimate_payoff_box(const PdmModel& pdm, const Protocol& protocol, const SimplexState& x0,
                              double T, double h, double inflation = 1.5);

}  // namespace popdyn
