#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace popdyn {

// Thrown when a computation produces non-finite values or a runtime
// numerical guard trips (diverged integration, violated rate bound, ...).
// Argument/contract violations use std::invalid_argument instead.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major, square in this library

double sup_norm(const Vec& v);
double sup_norm_diff(const Vec& a, const Vec& b);
double dot(const Vec& a, const Vec& b);
bool all_finite(const Vec& v);

inline constexpr double kSimplexMassTol = 1e-9;
inline constexpr double kTangentSumTol = 1e-9;

// Population state: n nonnegative shares summing to the population mass.
struct SimplexState {
  Vec entries;
  double mass = 1.0;

  SimplexState() = default;
  SimplexState(Vec e, double m);  // validates the simplex invariants

  int dim() const { return static_cast<int>(entries.size()); }
  double operator[](int i) const { return entries[static_cast<size_t>(i)]; }
};

SimplexState uniform_state(int n, double mass = 1.0);

// Per-strategy reward vector.
struct PayoffVector {
  Vec entries;

  PayoffVector() = default;
  explicit PayoffVector(Vec e);  // validates finiteness

  int dim() const { return static_cast<int>(entries.size()); }
  double operator[](int i) const { return entries[static_cast<size_t>(i)]; }
};

// Displacement in the subspace tangent to the simplex.
struct TangentVector {
  Vec entries;

  TangentVector() = default;
  explicit TangentVector(Vec e);  // validates zero sum

  int dim() const { return static_cast<int>(entries.size()); }
  double operator[](int i) const { return entries[static_cast<size_t>(i)]; }
};

// Internal state of a payoff dynamics model.
struct PdmState {
  Vec q;

  PdmState() = default;
  explicit PdmState(Vec s);  // validates finiteness

  int dim() const { return static_cast<int>(q.size()); }
};

}  // namespace popdyn
