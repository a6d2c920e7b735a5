#include "popdyn/closedloop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace popdyn {

namespace {

// Family dispatch on raw vectors; hot path of the integrator.
Vec mean_dynamic_raw(const Protocol& protocol, const Vec& z, const Vec& r, double mass) {
  const int n = protocol.n;
  Vec v(static_cast<size_t>(n), 0.0);
  switch (protocol.family) {
    case ProtocolFamily::ept: {
      double avg = 0.0;
      for (int i = 0; i < n; i++) avg += r[static_cast<size_t>(i)] * z[static_cast<size_t>(i)];
      avg /= mass;
      Vec rhat(static_cast<size_t>(n));
      for (int i = 0; i < n; i++) rhat[static_cast<size_t>(i)] = r[static_cast<size_t>(i)] - avg;
      double total = 0.0;
      Vec tau(static_cast<size_t>(n));
      for (int j = 0; j < n; j++) {
        double t = protocol.separable
                       ? protocol.scalar_rates[static_cast<size_t>(j)](rhat[static_cast<size_t>(j)])
                       : protocol.ept_rates[static_cast<size_t>(j)](rhat);
        tau[static_cast<size_t>(j)] = std::max(t, 0.0);
        total += tau[static_cast<size_t>(j)];
      }
      for (int i = 0; i < n; i++)
        v[static_cast<size_t>(i)] = mass * tau[static_cast<size_t>(i)] - z[static_cast<size_t>(i)] * total;
      break;
    }
    case ProtocolFamily::ipc: {
      for (int i = 0; i < n; i++) {
        double in = 0.0, out = 0.0;
        for (int j = 0; j < n; j++) {
          in += z[static_cast<size_t>(j)] *
                std::max(protocol.scalar_rates[static_cast<size_t>(i)](r[static_cast<size_t>(i)] - r[static_cast<size_t>(j)]), 0.0);
          out += std::max(protocol.scalar_rates[static_cast<size_t>(j)](r[static_cast<size_t>(j)] - r[static_cast<size_t>(i)]), 0.0);
        }
        v[static_cast<size_t>(i)] = in - z[static_cast<size_t>(i)] * out;
      }
      break;
    }
    case ProtocolFamily::pbr: {
      double mx = -std::numeric_limits<double>::infinity();
      for (double x : r) mx = std::max(mx, x);
      double sum = 0.0;
      Vec c(static_cast<size_t>(n));
      for (int i = 0; i < n; i++) {
        c[static_cast<size_t>(i)] = std::exp((r[static_cast<size_t>(i)] - mx) / protocol.eta);
        sum += c[static_cast<size_t>(i)];
      }
      for (int i = 0; i < n; i++)
        v[static_cast<size_t>(i)] = mass * c[static_cast<size_t>(i)] / sum - z[static_cast<size_t>(i)];
      break;
    }
  }
  return v;
}

}  // namespace

Trajectory integrate(const PdmModel& pdm, const Protocol& protocol, const SimplexState& x0,
                     const PdmState& q0, double T, double h) {
  if (!(T > 0.0)) throw std::invalid_argument("integrate: T must be positive");
  if (!(h > 0.0) || h > T) throw std::invalid_argument("integrate: need 0 < h <= T");
  if (x0.dim() != pdm.n || q0.dim() != pdm.n || protocol.n != pdm.n)
    throw std::invalid_argument("integrate: dimension mismatch");

  const int n = pdm.n;
  const double mass = x0.mass;
  const int steps = static_cast<int>(std::llround(T / h));

  Trajectory traj;
  traj.n = n;
  traj.mass = mass;
  traj.h = h;
  traj.T = steps * h;
  traj.times.resize(static_cast<size_t>(steps) + 1);
  traj.x.resize(static_cast<size_t>(steps) + 1);
  traj.q.resize(static_cast<size_t>(steps) + 1);

  Vec x = x0.entries;
  Vec q = q0.q;

  auto deriv = [&](const Vec& qs, const Vec& xs, Vec& dq, Vec& dx) {
    dq = pdm_derivative_raw(pdm, qs, xs);
    Vec p = pdm_output_raw(pdm, qs, xs);
    dx = mean_dynamic_raw(protocol, xs, p, mass);
  };

  Vec k1q(n), k1x(n), k2q(n), k2x(n), k3q(n), k3x(n), k4q(n), k4x(n);
  Vec tq(n), tx(n);

  traj.times[0] = 0.0;
  traj.x[0] = x;
  traj.q[0] = q;
  for (int k = 0; k < steps; k++) {
    deriv(q, x, k1q, k1x);
    for (int i = 0; i < n; i++) {
      tq[static_cast<size_t>(i)] = q[static_cast<size_t>(i)] + 0.5 * h * k1q[static_cast<size_t>(i)];
      tx[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] + 0.5 * h * k1x[static_cast<size_t>(i)];
    }
    deriv(tq, tx, k2q, k2x);
    for (int i = 0; i < n; i++) {
      tq[static_cast<size_t>(i)] = q[static_cast<size_t>(i)] + 0.5 * h * k2q[static_cast<size_t>(i)];
      tx[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] + 0.5 * h * k2x[static_cast<size_t>(i)];
    }
    deriv(tq, tx, k3q, k3x);
    for (int i = 0; i < n; i++) {
      tq[static_cast<size_t>(i)] = q[static_cast<size_t>(i)] + h * k3q[static_cast<size_t>(i)];
      tx[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] + h * k3x[static_cast<size_t>(i)];
    }
    deriv(tq, tx, k4q, k4x);
    double sum = 0.0;
    double correction = 0.0;
    for (int i = 0; i < n; i++) {
      auto iu = static_cast<size_t>(i);
      q[iu] += h / 6.0 * (k1q[iu] + 2.0 * k2q[iu] + 2.0 * k3q[iu] + k4q[iu]);
      x[iu] += h / 6.0 * (k1x[iu] + 2.0 * k2x[iu] + 2.0 * k3x[iu] + k4x[iu]);
      if (!std::isfinite(x[iu]) || !std::isfinite(q[iu]))
        throw NumericalError("integrate: state diverged at t = " + std::to_string((k + 1) * h));
      if (x[iu] < 0.0) {
        correction = std::max(correction, -x[iu]);
        x[iu] = 0.0;
      }
      sum += x[iu];
    }
    if (!(sum > 0.0)) throw NumericalError("integrate: state collapsed at t = " + std::to_string((k + 1) * h));
    double scale = mass / sum;
    for (int i = 0; i < n; i++) {
      double before = x[static_cast<size_t>(i)];
      x[static_cast<size_t>(i)] *= scale;
      correction = std::max(correction, std::abs(x[static_cast<size_t>(i)] - before));
    }
    traj.max_projection_deviation = std::max(traj.max_projection_deviation, correction);
    traj.cumulative_projection_correction += correction;
    traj.times[static_cast<size_t>(k) + 1] = (k + 1) * h;
    traj.x[static_cast<size_t>(k) + 1] = x;
    traj.q[static_cast<size_t>(k) + 1] = q;
  }

  const int ns = traj.samples();
  traj.p.resize(static_cast<size_t>(ns));
  traj.xdot.resize(static_cast<size_t>(ns));
  traj.qdot.resize(static_cast<size_t>(ns));
  traj.pdot.resize(static_cast<size_t>(ns));
  for (int k = 0; k < ns; k++) {
    auto ku = static_cast<size_t>(k);
    traj.p[ku] = pdm_output_raw(pdm, traj.q[ku], traj.x[ku]);
    traj.qdot[ku] = pdm_derivative_raw(pdm, traj.q[ku], traj.x[ku]);
    traj.xdot[ku] = mean_dynamic_raw(protocol, traj.x[ku], traj.p[ku], mass);
  }
  for (int k = 0; k < ns; k++) {
    auto ku = static_cast<size_t>(k);
    traj.pdot[ku].resize(static_cast<size_t>(n));
    for (int i = 0; i < n; i++) {
      auto iu = static_cast<size_t>(i);
      if (k == 0)
        traj.pdot[ku][iu] = (traj.p[1][iu] - traj.p[0][iu]) / h;
      else if (k == ns - 1)
        traj.pdot[ku][iu] = (traj.p[ku][iu] - traj.p[ku - 1][iu]) / h;
      else
        traj.pdot[ku][iu] = (traj.p[ku + 1][iu] - traj.p[ku - 1][iu]) / (2.0 * h);
    }
  }
  return traj;
}

Trajectory integrate(const PdmModel& pdm, const Protocol& protocol, const SimplexState& x0,
                     double T, double h) {
  PdmState q0(pdm.game.payoff_fn(x0.entries));
  return integrate(pdm, protocol, x0, q0, T, h);
}

double distance_to_set(const SimplexState& z, const EquilibriumSet& set) {
  if (set.points.empty()) throw std::invalid_argument("distance_to_set: empty equilibrium set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : set.points) best = std::min(best, sup_norm_diff(z.entries, e.entries));
  return best;
}

ConvergenceReport convergence_report(const Trajectory& traj, const EquilibriumSet& set,
                                     const PopulationGame& stationary, double threshold) {
  ConvergenceReport rep;
  rep.threshold = threshold;
  const int ns = traj.samples();
  rep.dist.resize(static_cast<size_t>(ns));
  rep.payoff_gap.resize(static_cast<size_t>(ns));
  for (int k = 0; k < ns; k++) {
    auto ku = static_cast<size_t>(k);
    SimplexState z(traj.x[ku], traj.mass);
    rep.dist[ku] = distance_to_set(z, set);
    rep.payoff_gap[ku] = sup_norm_diff(traj.p[ku], stationary.payoff_fn(traj.x[ku]));
  }
  rep.terminal_dist = rep.dist.back();
  rep.terminal_gap = rep.payoff_gap.back();
  rep.time_to_threshold = std::numeric_limits<double>::infinity();
  for (int k = ns - 1; k >= 0; k--) {
    if (rep.dist[static_cast<size_t>(k)] >= threshold) break;
    rep.time_to_threshold = traj.times[static_cast<size_t>(k)];
  }
  return rep;
}

}  // namespace popdyn
