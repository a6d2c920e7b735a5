#pragma once

#include <string>
#include <vector>

#include "popdyn/games.hpp"
#include "popdyn/types.hpp"

namespace popdyn {

enum class EquilibriumKind { nash, perturbed };

struct EquilibriumSet {
  std::vector<SimplexState> points;
  EquilibriumKind kind = EquilibriumKind::nash;
  double tolerance = 0.0;
  bool search_failed = false;  // no candidate survived
  std::string note;
};

// True iff every supported strategy (share > tol) earns within tol of the
// maximum payoff at z.
bool is_nash(const PopulationGame& game, const SimplexState& z, double tol);

// Nash set of the stationary game. Affine games: support enumeration with
// an equal-payoff linear solve per support (any n <= 10). General games:
// barycentric grid scan for near-stationary points of the Smith dynamic,
// refined by damped flow iteration (n = 3 only).
EquilibriumSet nash_set(const PopulationGame& game, int grid_resolution = 60, double tol = 1e-8);

// Fixed points z = m C(Fbar(z)) of the logit choice rule, from damped
// iterations started at the barycenter and inward-pulled vertices.
EquilibriumSet perturbed_equilibrium(const PopulationGame& game, double eta, double damping = 0.5,
                                     double tol = 1e-10, int max_iter = 200000);

}  // namespace popdyn
