#include "popdyn/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace popdyn {

namespace {

void rk4_pdm_step(const PdmModel& pdm, Vec& q, const Vec& u, double h) {
  const size_t n = q.size();
  Vec k1 = pdm_derivative_raw(pdm, q, u);
  Vec tmp(n);
  for (size_t i = 0; i < n; i++) tmp[i] = q[i] + 0.5 * h * k1[i];
  Vec k2 = pdm_derivative_raw(pdm, tmp, u);
  for (size_t i = 0; i < n; i++) tmp[i] = q[i] + 0.5 * h * k2[i];
  Vec k3 = pdm_derivative_raw(pdm, tmp, u);
  for (size_t i = 0; i < n; i++) tmp[i] = q[i] + h * k3[i];
  Vec k4 = pdm_derivative_raw(pdm, tmp, u);
  for (size_t i = 0; i < n; i++) q[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

// Integrate the PDM state from t to t_target with frozen population input,
// stepping at most `h` at a time.
void advance_pdm(const PdmModel& pdm, Vec& q, const Vec& u, double t, double t_target, double h) {
  double remaining = t_target - t;
  while (remaining > 1e-15) {
    double step = std::min(h, remaining);
    rk4_pdm_step(pdm, q, u, step);
    remaining -= step;
  }
}

}  // namespace

Vec JumpTrajectory::state_at_grid(int k) const {
  Vec z(static_cast<size_t>(n));
  for (int i = 0; i < n; i++)
    z[static_cast<size_t>(i)] =
        static_cast<double>(grid_counts[static_cast<size_t>(k)][static_cast<size_t>(i)]) / N;
  return z;
}

double choose_rate_bound(const Protocol& protocol, const PayoffBox& box, int box_points_per_axis,
                         int simplex_resolution) {
  const int n = protocol.n;
  if (box.dim() != n || static_cast<int>(box.hi.size()) != n)
    throw std::invalid_argument("choose_rate_bound: box dimension mismatch");
  if (protocol.family == ProtocolFamily::pbr) {
    // choice probabilities sum to one regardless of the payoff
    return 1.1;
  }
  std::vector<SimplexState> zgrid;
  if (protocol.family == ProtocolFamily::ept) {
    if (n != 3) throw std::invalid_argument("choose_rate_bound: EPT grid supports n = 3 only");
    zgrid = barycentric_grid(simplex_resolution, 1.0);
  } else {
    zgrid.push_back(uniform_state(n));  // IPC rates do not depend on z
  }

  const int k = std::max(box_points_per_axis, 2);
  std::vector<int> digit(static_cast<size_t>(n), 0);
  double worst = 0.0;
  while (true) {
    Vec r(static_cast<size_t>(n));
    for (int i = 0; i < n; i++) {
      auto iu = static_cast<size_t>(i);
      r[iu] = box.lo[iu] + (box.hi[iu] - box.lo[iu]) * digit[iu] / (k - 1);
    }
    PayoffVector rv(r);
    for (const auto& z : zgrid) {
      for (int i = 0; i < n; i++) {
        Vec row = protocol_rate_row(protocol, i, rv, z);
        double total = 0.0;
        for (int j = 0; j < n; j++)
          if (j != i) total += row[static_cast<size_t>(j)];
        worst = std::max(worst, total);
      }
    }
    int pos = 0;
    while (pos < n && ++digit[static_cast<size_t>(pos)] == k) digit[static_cast<size_t>(pos++)] = 0;
    if (pos == n) break;
  }
  return worst * 1.1;
}

std::vector<int> round_to_count_grid(const SimplexState& x0, int N) {
  if (N < 1) throw std::invalid_argument("round_to_count_grid: N must be >= 1");
  const int n = x0.dim();
  std::vector<int> counts(static_cast<size_t>(n));
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int i = 0; i < n; i++) {
    double exact = x0[i] / x0.mass * N;
    counts[static_cast<size_t>(i)] = static_cast<int>(std::floor(exact));
    assigned += counts[static_cast<size_t>(i)];
    remainders.push_back({exact - std::floor(exact), i});
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int r = 0; r < N - assigned; r++)
    counts[static_cast<size_t>(remainders[static_cast<size_t>(r)].second)]++;
  return counts;
}

PayoffBox estimate_payoff_box(const PdmModel& pdm, const Protocol& protocol, const SimplexState& x0,
                              double T, double h, double inflation) {
  const int n = pdm.n;
  PayoffBox box;
  box.lo.assign(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
  box.hi.assign(static_cast<size_t>(n), -std::numeric_limits<double>::infinity());

  std::vector<SimplexState> starts;
  starts.push_back(x0);
  for (int i = 0; i < n; i++) {
    Vec e(static_cast<size_t>(n), 0.05 * x0.mass / n);
    e[static_cast<size_t>(i)] += 0.95 * x0.mass;
    double sum = std::accumulate(e.begin(), e.end(), 0.0);
    for (double& x : e) x *= x0.mass / sum;
    starts.emplace_back(std::move(e), x0.mass);
  }
  for (const auto& start : starts) {
    Trajectory traj = integrate(pdm, protocol, start, T, h);
    for (const auto& p : traj.p)
      for (int i = 0; i < n; i++) {
        auto iu = static_cast<size_t>(i);
        box.lo[iu] = std::min(box.lo[iu], p[iu]);
        box.hi[iu] = std::max(box.hi[iu], p[iu]);
      }
  }
  for (int i = 0; i < n; i++) {
    auto iu = static_cast<size_t>(i);
    double center = 0.5 * (box.lo[iu] + box.hi[iu]);
    double half = 0.5 * (box.hi[iu] - box.lo[iu]);
    half = std::max(half * inflation, 1e-6 + 0.05 * std::abs(center));
    box.lo[iu] = center - half;
    box.hi[iu] = center + half;
  }
  return box;
}

JumpTrajectory simulate_finite_population(int N, const Protocol& protocol, const PdmModel& pdm,
                                          const SimplexState& x0, const PdmState& q0, double T,
                                          double rho, uint64_t seed, const JumpSimOptions& opts) {
  if (N < 1) throw std::invalid_argument("simulate_finite_population: N must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("simulate_finite_population: T must be positive");
  if (!(rho > 0.0)) throw std::invalid_argument("simulate_finite_population: rho must be positive");
  if (x0.dim() != pdm.n || q0.dim() != pdm.n || protocol.n != pdm.n)
    throw std::invalid_argument("simulate_finite_population: dimension mismatch");
  if (std::abs(x0.mass - 1.0) > 1e-12)
    throw std::invalid_argument("simulate_finite_population: finite-population runs assume unit mass");

  const int n = pdm.n;
  JumpTrajectory jt;
  jt.N = N;
  jt.n = n;
  jt.T = T;
  jt.output_step = opts.output_step;
  jt.events_recorded = opts.record_events;

  std::vector<int> counts = round_to_count_grid(x0, N);
  Vec q = q0.q;
  Vec z(static_cast<size_t>(n));
  auto refresh_state = [&]() {
    for (int i = 0; i < n; i++)
      z[static_cast<size_t>(i)] = static_cast<double>(counts[static_cast<size_t>(i)]) / N;
  };
  refresh_state();

  const int grid_samples = static_cast<int>(std::llround(T / opts.output_step)) + 1;
  jt.grid_times.reserve(static_cast<size_t>(grid_samples));
  jt.grid_counts.reserve(static_cast<size_t>(grid_samples));
  jt.grid_q.reserve(static_cast<size_t>(grid_samples));

  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(static_cast<double>(N) * rho);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double t = 0.0;
  int next_grid = 0;
  auto emit_grid_until = [&](double horizon) {
    while (next_grid < grid_samples) {
      double tg = next_grid * opts.output_step;
      if (tg > horizon + 1e-15) break;
      advance_pdm(pdm, q, z, t, tg, opts.output_step);
      t = tg;
      jt.grid_times.push_back(tg);
      jt.grid_counts.push_back(counts);
      jt.grid_q.push_back(q);
      next_grid++;
    }
  };

  while (true) {
    double gap = expo(rng);
    double t_jump = t + gap;
    if (t_jump > T) {
      emit_grid_until(T);
      break;
    }
    emit_grid_until(t_jump);
    advance_pdm(pdm, q, z, t, t_jump, opts.output_step);
    t = t_jump;

    Vec p = pdm_output_raw(pdm, q, z);
    // revising agent drawn uniformly; its strategy has the empirical law
    double u1 = unif(rng);
    int agent = std::min(static_cast<int>(u1 * N), N - 1);
    int from = 0;
    for (int acc = 0; from < n; from++) {
      acc += counts[static_cast<size_t>(from)];
      if (agent < acc) break;
    }
    if (from == n) from = n - 1;

    Vec row = protocol_rate_row(protocol, from, PayoffVector(p), SimplexState(z, x0.mass));
    double total = 0.0;
    for (int j = 0; j < n; j++)
      if (j != from) total += row[static_cast<size_t>(j)];
    if (total / rho > 1.0 + 1e-12)
      throw NumericalError("simulate_finite_population: rate bound violated at t = " +
                           std::to_string(t) + " (total " + std::to_string(total) + " > rho " +
                           std::to_string(rho) + ")");

    double u2 = unif(rng);
    int to = -1;
    double acc = 0.0;
    for (int j = 0; j < n; j++) {
      if (j == from) continue;
      acc += row[static_cast<size_t>(j)] / rho;
      if (u2 < acc) {
        to = j;
        break;
      }
    }
    if (to >= 0) {
      counts[static_cast<size_t>(from)]--;
      counts[static_cast<size_t>(to)]++;
      refresh_state();
    }
    if (opts.record_events) {
      jt.event_times.push_back(t);
      jt.event_counts.push_back(counts);
      jt.event_payoffs.push_back(p);
    }
  }
  return jt;
}

double sup_deviation(const JumpTrajectory& jump, const Trajectory& mean) {
  if (std::abs(jump.T - mean.T) > 1e-9 || std::abs(jump.output_step - mean.h) > 1e-12 ||
      static_cast<int>(jump.grid_times.size()) != mean.samples())
    throw std::invalid_argument("sup_deviation: horizon or grid mismatch");
  double worst = 0.0;
  for (int k = 0; k < mean.samples(); k++)
    worst = std::max(worst, sup_norm_diff(jump.state_at_grid(k), mean.x[static_cast<size_t>(k)]));
  return worst;
}

}  // namespace popdyn
