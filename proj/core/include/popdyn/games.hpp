#pragma once

#include <functional>
#include <string>
#include <vector>

#include "popdyn/types.hpp"

namespace popdyn {

enum class GameStructure { affine, diagonal_separable, general };

// A population game: a payoff map F defined on the mass-m simplex.
//
// The raw evaluator takes a plain coordinate vector so that finite
// differencing may step slightly off the simplex; validity of states is
// enforced where SimplexState objects are constructed, not per call.
// Immutable after construction.
struct PopulationGame {
  int n = 0;
  double mass = 1.0;
  GameStructure structure = GameStructure::general;
  std::string name = "custom";

  std::function<Vec(const Vec&)> payoff_fn;   // z -> F(z)
  std::function<Mat(const Vec&)> jacobian_fn; // optional analytic z -> DF(z)

  // affine structure: F(z) = matrix * z + offset, exactly
  Mat matrix;
  Vec offset;

  // diagonal-separable structure: F_i(z) = reward[i](z_i)
  std::vector<std::function<double(double)>> reward;
  std::vector<std::function<double(double)>> reward_derivative;

  bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_fn); }
};

PopulationGame affine_game(Mat matrix, Vec offset, double mass = 1.0);
PopulationGame diagonal_separable_game(std::vector<std::function<double(double)>> reward,
                                       std::vector<std::function<double(double)>> reward_derivative,
                                       double mass = 1.0, const std::string& name = "custom");
PopulationGame general_game(int n, std::function<Vec(const Vec&)> payoff_fn, double mass = 1.0,
                            const std::string& name = "custom");

// The three example games (n = 3, unit mass).
PopulationGame congestion_example();
PopulationGame demand_response_example();
PopulationGame task_allocation_example();

PayoffVector payoff(const PopulationGame& game, const SimplexState& z);

// Analytic Jacobian when declared, otherwise central differences with raw
// coordinate perturbations of size fd_step.
Mat jacobian(const PopulationGame& game, const SimplexState& z, double fd_step = 1e-6);

// Always uses central differences; test oracle and fallback path.
Mat finite_difference_jacobian(const PopulationGame& game, const Vec& z, double fd_step);

// max_z ||F(z)||_inf over a barycentric grid (n = 3 only).
double max_payoff_norm(const PopulationGame& game, int grid_resolution = 200);

struct GridOptions {
  bool interior_only = false;  // drop points with a zero share
  bool include_center = true;  // keep the exact barycenter when it is a lattice point
};

// Barycentric lattice {(i, j, resolution-i-j)/resolution * mass} on the
// n = 3 simplex, lexicographically ordered.
std::vector<SimplexState> barycentric_grid(int resolution, double mass = 1.0,
                                           const GridOptions& opts = {});

}  // namespace popdyn
