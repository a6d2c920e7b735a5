#include "popdyn/pdm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace popdyn {

namespace {

void validate_params(double alpha, double mu0, double mu1, double mu2) {
  if (!(alpha > 0.0)) throw std::invalid_argument("PdmModel: alpha must be positive");
  if (mu0 < 0.0 || mu1 < 0.0 || mu2 < 0.0)
    throw std::invalid_argument("PdmModel: mu parameters must be nonnegative");
  if (std::abs(mu0 + mu1 - 1.0) > 1e-12)
    throw std::invalid_argument("PdmModel: mu0 + mu1 must equal 1");
}

}  // namespace

PdmModel memoryless_pdm(PopulationGame game) {
  PdmModel p;
  p.n = game.n;
  p.game = std::move(game);
  p.kind = PdmKind::memoryless;
  p.alpha = 1.0;
  p.mu0 = 1.0;
  p.mu1 = 0.0;
  p.mu2 = 0.0;
  return p;
}

PdmModel anticipatory_pdm(PopulationGame game, double alpha, double mu2) {
  validate_params(alpha, 1.0, 0.0, mu2);
  PdmModel p;
  p.n = game.n;
  p.game = std::move(game);
  p.kind = PdmKind::smoothing_anticipatory;
  p.alpha = alpha;
  p.mu0 = 1.0;
  p.mu1 = 0.0;
  p.mu2 = mu2;
  return p;
}

PdmModel smoothing_pdm(PopulationGame game, double alpha) {
  validate_params(alpha, 0.0, 1.0, 0.0);
  PdmModel p;
  p.n = game.n;
  p.game = std::move(game);
  p.kind = PdmKind::smoothing_anticipatory;
  p.alpha = alpha;
  p.mu0 = 0.0;
  p.mu1 = 1.0;
  p.mu2 = 0.0;
  return p;
}

PdmModel general_pdm(PopulationGame game, double alpha, double mu0, double mu1, double mu2) {
  validate_params(alpha, mu0, mu1, mu2);
  PdmModel p;
  p.n = game.n;
  p.game = std::move(game);
  p.kind = PdmKind::smoothing_anticipatory;
  p.alpha = alpha;
  p.mu0 = mu0;
  p.mu1 = mu1;
  p.mu2 = mu2;
  return p;
}

Vec pdm_derivative_raw(const PdmModel& pdm, const Vec& q, const Vec& u) {
  Vec f = pdm.game.payoff_fn(u);
  const double a = (pdm.kind == PdmKind::memoryless) ? 1.0 : pdm.alpha;
  for (size_t i = 0; i < f.size(); i++) f[i] = a * (f[i] - q[i]);
  return f;
}

Vec pdm_output_raw(const PdmModel& pdm, const Vec& q, const Vec& u) {
  Vec f = pdm.game.payoff_fn(u);
  if (pdm.kind == PdmKind::memoryless) return f;
  const double gf = pdm.output_game_gain();
  const double gq = pdm.output_state_gain();
  for (size_t i = 0; i < f.size(); i++) f[i] = gf * f[i] + gq * q[i];
  return f;
}

Vec pdm_derivative(const PdmModel& pdm, const PdmState& q, const SimplexState& u) {
  if (q.dim() != pdm.n || u.dim() != pdm.n)
    throw std::invalid_argument("pdm_derivative: dimension mismatch");
  return pdm_derivative_raw(pdm, q.q, u.entries);
}

PayoffVector pdm_output(const PdmModel& pdm, const PdmState& q, const SimplexState& u) {
  if (q.dim() != pdm.n || u.dim() != pdm.n)
    throw std::invalid_argument("pdm_output: dimension mismatch");
  return PayoffVector(pdm_output_raw(pdm, q.q, u.entries));
}

const PopulationGame& stationary_game(const PdmModel& pdm) { return pdm.game; }

DecayReport stationary_response_check(const PdmModel& pdm, const SimplexState& u_const, double T,
                                      double h) {
  if (!(T > 0.0) || !(h > 0.0)) throw std::invalid_argument("stationary_response_check: T, h must be positive");
  const int steps = static_cast<int>(std::llround(T / h));
  const Vec& u = u_const.entries;
  Vec fbar = pdm.game.payoff_fn(u);
  Vec q(static_cast<size_t>(pdm.n), 0.0);

  DecayReport rep;
  rep.output_on_manifold =
      (pdm.kind != PdmKind::memoryless) && std::abs(pdm.output_state_gain()) < 1e-14;
  rep.times.reserve(static_cast<size_t>(steps) + 1);
  rep.deviations.reserve(static_cast<size_t>(steps) + 1);

  auto record = [&](double t) {
    Vec p = pdm_output_raw(pdm, q, u);
    rep.times.push_back(t);
    rep.deviations.push_back(sup_norm_diff(p, fbar));
  };
  record(0.0);
  for (int k = 0; k < steps; k++) {
    // RK4 on the filter state with frozen input
    Vec k1 = pdm_derivative_raw(pdm, q, u);
    Vec tmp(q.size());
    for (size_t i = 0; i < q.size(); i++) tmp[i] = q[i] + 0.5 * h * k1[i];
    Vec k2 = pdm_derivative_raw(pdm, tmp, u);
    for (size_t i = 0; i < q.size(); i++) tmp[i] = q[i] + 0.5 * h * k2[i];
    Vec k3 = pdm_derivative_raw(pdm, tmp, u);
    for (size_t i = 0; i < q.size(); i++) tmp[i] = q[i] + h * k3[i];
    Vec k4 = pdm_derivative_raw(pdm, tmp, u);
    for (size_t i = 0; i < q.size(); i++)
      q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    record((k + 1) * h);
  }

  const double alpha = (pdm.kind == PdmKind::memoryless) ? 1.0 : pdm.alpha;
  double dev_max = *std::max_element(rep.deviations.begin(), rep.deviations.end());
  if (dev_max < 1e-12) {
    rep.degenerate = true;
    rep.fitted_rate = std::numeric_limits<double>::infinity();
    rep.pass = true;
    return rep;
  }

  // log-linear fit of ln(deviation) against t over samples above the noise floor
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (size_t k = 0; k < rep.times.size(); k++) {
    if (rep.deviations[k] < 1e-13) continue;
    double x = rep.times[k], y = std::log(rep.deviations[k]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    cnt++;
  }
  if (cnt < 2) {
    rep.pass = false;
    return rep;
  }
  double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  rep.fitted_rate = -slope;
  rep.pass = rep.fitted_rate >= alpha * (1.0 - 0.05) && rep.deviations.back() < dev_max;
  return rep;
}

}  // namespace popdyn
