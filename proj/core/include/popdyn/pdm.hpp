#pragma once

#include <string>
#include <vector>

#include "popdyn/games.hpp"
#include "popdyn/types.hpp"

namespace popdyn {

enum class PdmKind { memoryless, smoothing_anticipatory };

// A payoff dynamics model over a base game F:
//
//   qdot = alpha (F(u) - q)
//   p    = mu0 F(u) + mu1 q + mu2 qdot
//        = (mu0 + alpha mu2) F(u) + (mu1 - alpha mu2) q
//
// with mu0 + mu1 = 1. The memoryless case is stored as mu0 = 1,
// mu1 = mu2 = 0 and outputs F(u) directly. Immutable after construction.
struct PdmModel {
  int n = 0;
  PopulationGame game;
  PdmKind kind = PdmKind::memoryless;
  double alpha = 1.0;
  double mu0 = 1.0;
  double mu1 = 0.0;
  double mu2 = 0.0;

  double output_game_gain() const { return mu0 + alpha * mu2; }
  double output_state_gain() const { return mu1 - alpha * mu2; }
};

PdmModel memoryless_pdm(PopulationGame game);
PdmModel anticipatory_pdm(PopulationGame game, double alpha, double mu2);
PdmModel smoothing_pdm(PopulationGame game, double alpha);
PdmModel general_pdm(PopulationGame game, double alpha, double mu0, double mu1, double mu2);

Vec pdm_derivative(const PdmModel& pdm, const PdmState& q, const SimplexState& u);
PayoffVector pdm_output(const PdmModel& pdm, const PdmState& q, const SimplexState& u);
const PopulationGame& stationary_game(const PdmModel& pdm);

// Unchecked versions used inside integrator stage evaluations.
Vec pdm_derivative_raw(const PdmModel& pdm, const Vec& q, const Vec& u);
Vec pdm_output_raw(const PdmModel& pdm, const Vec& q, const Vec& u);

// Result of driving the PDM with a constant input from q(0) = 0 and
// watching ||p(t) - Fbar(u)|| decay.
struct DecayReport {
  std::vector<double> times;
  std::vector<double> deviations;
  double fitted_rate = 0.0;      // decay rate from log-linear regression
  bool degenerate = false;       // deviation at rounding scale throughout
  bool output_on_manifold = false;  // mu1 == alpha mu2, output identically stationary
  bool pass = false;
};

DecayReport stationary_response_check(const PdmModel& pdm, const SimplexState& u_const, double T,
                                      double h);

}  // namespace popdyn
