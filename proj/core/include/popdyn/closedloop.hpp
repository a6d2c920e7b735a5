#pragma once

#include <vector>

#include "popdyn/edm.hpp"
#include "popdyn/equilibria.hpp"
#include "popdyn/pdm.hpp"
#include "popdyn/types.hpp"

namespace popdyn {

// Uniformly sampled solution of the mean closed loop: population state x,
// PDM state q, payoff p, and their derivatives. xdot and qdot are
// model-evaluated at the grid points, pdot comes from central differences
// (one-sided at the endpoints). Diagnostics columns are filled by callers.
struct Trajectory {
  int n = 0;
  double mass = 1.0;
  double h = 0.0;
  double T = 0.0;
  std::vector<double> times;
  std::vector<Vec> x, q, p;
  std::vector<Vec> xdot, qdot, pdot;

  double max_projection_deviation = 0.0;      // worst per-step deviation before projection
  double cumulative_projection_correction = 0.0;

  std::vector<double> storage;     // optional, matched storage value per sample
  std::vector<double> dist_to_eq;  // optional
  std::vector<double> payoff_gap;  // optional

  int samples() const { return static_cast<int>(times.size()); }
};

// Classic fixed-step RK4 on the joint state (q, x); x is clipped and
// renormalized to the simplex after every step (corrections are
// rounding-scale because the dynamic is tangent).
Trajectory integrate(const PdmModel& pdm, const Protocol& protocol, const SimplexState& x0,
                     const PdmState& q0, double T, double h);

// q(0) defaults to F(x(0)): start on the stationary manifold.
Trajectory integrate(const PdmModel& pdm, const Protocol& protocol, const SimplexState& x0,
                     double T, double h);

// Minimum sup-norm distance from z to the points of the set.
double distance_to_set(const SimplexState& z, const EquilibriumSet& set);

struct ConvergenceReport {
  std::vector<double> dist;        // distance to the equilibrium set over time
  std::vector<double> payoff_gap;  // ||p(t) - Fbar(x(t))||
  double terminal_dist = 0.0;
  double terminal_gap = 0.0;
  double threshold = 0.0;
  double time_to_threshold = 0.0;  // first time after which dist stays below threshold; inf if never
};

ConvergenceReport convergence_report(const Trajectory& traj, const EquilibriumSet& set,
                                     const PopulationGame& stationary, double threshold = 1e-2);

}  // namespace popdyn
