#include "popdyn/types.hpp"

#include <algorithm>

namespace popdyn {

double sup_norm(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double sup_norm_diff(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sup_norm_diff: dimension mismatch");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); i++) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); i++) s += a[i] * b[i];
  return s;
}

bool all_finite(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

SimplexState::SimplexState(Vec e, double m) : entries(std::move(e)), mass(m) {
  if (entries.empty()) throw std::invalid_argument("SimplexState: empty state");
  if (!(mass > 0.0)) throw std::invalid_argument("SimplexState: mass must be positive");
  double sum = 0.0;
  for (double x : entries) {
    if (!std::isfinite(x)) throw std::invalid_argument("SimplexState: non-finite entry");
    if (x < 0.0) throw std::invalid_argument("SimplexState: negative entry");
    sum += x;
  }
  if (std::abs(sum - mass) > kSimplexMassTol)
    throw std::invalid_argument("SimplexState: entries sum to " + std::to_string(sum) +
                                ", expected mass " + std::to_string(mass));
}

SimplexState uniform_state(int n, double mass) {
  if (n < 1) throw std::invalid_argument("uniform_state: n must be >= 1");
  return SimplexState(Vec(static_cast<size_t>(n), mass / n), mass);
}

PayoffVector::PayoffVector(Vec e) : entries(std::move(e)) {
  if (!all_finite(entries)) throw std::invalid_argument("PayoffVector: non-finite entry");
}

TangentVector::TangentVector(Vec e) : entries(std::move(e)) {
  double sum = 0.0;
  for (double x : entries) {
    if (!std::isfinite(x)) throw std::invalid_argument("TangentVector: non-finite entry");
    sum += x;
  }
  if (std::abs(sum) > kTangentSumTol)
    throw std::invalid_argument("TangentVector: entries sum to " + std::to_string(sum));
}

PdmState::PdmState(Vec s) : q(std::move(s)) {
  if (!all_finite(q)) throw std::invalid_argument("PdmState: non-finite entry");
}

}  // namespace popdyn
