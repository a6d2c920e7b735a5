#pragma once

#include <random>

#include "popdyn/types.hpp"

namespace testutil {

// Uniform Dirichlet sample on the mass-m simplex.
inline popdyn::SimplexState random_simplex(std::mt19937_64& rng, int n, double mass = 1.0,
                                           double floor = 0.0) {
  std::exponential_distribution<double> expo(1.0);
  popdyn::Vec e(static_cast<size_t>(n));
  double sum = 0.0;
  for (auto& x : e) {
    x = expo(rng) + floor;
    sum += x;
  }
  for (auto& x : e) x *= mass / sum;
  return popdyn::SimplexState(e, mass);
}

// Random boundary state: one random coordinate forced to zero.
inline popdyn::SimplexState random_boundary(std::mt19937_64& rng, int n, double mass = 1.0) {
  popdyn::SimplexState z = random_simplex(rng, n, mass);
  std::uniform_int_distribution<int> pick(0, n - 1);
  int dead = pick(rng);
  popdyn::Vec e = z.entries;
  double removed = e[static_cast<size_t>(dead)];
  e[static_cast<size_t>(dead)] = 0.0;
  double scale = mass / (mass - removed);
  for (int i = 0; i < n; i++)
    if (i != dead) e[static_cast<size_t>(i)] *= scale;
  return popdyn::SimplexState(e, mass);
}

inline popdyn::PayoffVector random_payoff(std::mt19937_64& rng, int n, double lo = -2.0,
                                          double hi = 2.0) {
  std::uniform_real_distribution<double> unif(lo, hi);
  popdyn::Vec e(static_cast<size_t>(n));
  for (auto& x : e) x = unif(rng);
  return popdyn::PayoffVector(e);
}

}  // namespace testutil
