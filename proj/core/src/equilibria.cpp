#include "popdyn/equilibria.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "popdyn/edm.hpp"

namespace popdyn {

namespace {

bool lex_less(const SimplexState& a, const SimplexState& b) {
  return std::lexicographical_compare(a.entries.begin(), a.entries.end(), b.entries.begin(),
                                      b.entries.end());
}

std::vector<SimplexState> dedup_sorted(std::vector<SimplexState> pts, double radius) {
  std::sort(pts.begin(), pts.end(), lex_less);
  std::vector<SimplexState> out;
  for (auto& p : pts) {
    bool dup = false;
    for (const auto& q : out)
      if (sup_norm_diff(p.entries, q.entries) <= radius) {
        dup = true;
        break;
      }
    if (!dup) out.push_back(std::move(p));
  }
  return out;
}

SimplexState project_to_simplex(Vec z, double mass) {
  double sum = 0.0;
  for (double& x : z) {
    if (x < 0.0) x = 0.0;
    sum += x;
  }
  if (!(sum > 0.0)) throw NumericalError("project_to_simplex: vanished state");
  for (double& x : z) x *= mass / sum;
  return SimplexState(std::move(z), mass);
}

// Damped Smith-dynamic flow; polishes attractors, walks away from saddles.
bool refine_by_smith_flow(const PopulationGame& game, Vec& z, double stat_tol, int max_iter) {
  Protocol smith = smith_protocol(game.n);
  double kappa = 0.25;
  SimplexState zs = project_to_simplex(z, game.mass);
  Vec v = mean_dynamic(smith, zs, payoff(game, zs)).entries;
  double vn = sup_norm(v);
  for (int it = 0; it < max_iter && vn > stat_tol; it++) {
    Vec zn = zs.entries;
    for (size_t i = 0; i < zn.size(); i++) zn[i] += kappa * v[i];
    SimplexState cand = project_to_simplex(std::move(zn), game.mass);
    Vec vc = mean_dynamic(smith, cand, payoff(game, cand)).entries;
    double vcn = sup_norm(vc);
    if (vcn <= vn) {
      zs = std::move(cand);
      v = std::move(vc);
      vn = vcn;
      kappa = std::min(0.5, kappa * 1.2);
    } else {
      kappa *= 0.5;
      if (kappa < 1e-8) break;
    }
  }
  z = zs.entries;
  return vn <= stat_tol;
}

void nash_set_affine(const PopulationGame& game, double tol, EquilibriumSet& out) {
  const int n = game.n;
  if (n > 10) throw std::invalid_argument("nash_set: support enumeration limited to n <= 10");
  Eigen::MatrixXd F(n, n);
  Eigen::VectorXd rbar(n);
  for (int i = 0; i < n; i++) {
    rbar(i) = game.offset[static_cast<size_t>(i)];
    for (int j = 0; j < n; j++) F(i, j) = game.matrix[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }
  for (unsigned mask = 1; mask < (1u << n); mask++) {
    std::vector<int> support;
    for (int i = 0; i < n; i++)
      if (mask & (1u << i)) support.push_back(i);
    const int k = static_cast<int>(support.size());
    // unknowns: shares on the support plus the common payoff c
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k + 1, k + 1);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k + 1);
    for (int a = 0; a < k; a++) {
      for (int c = 0; c < k; c++) A(a, c) = F(support[static_cast<size_t>(a)], support[static_cast<size_t>(c)]);
      A(a, k) = -1.0;
      b(a) = -rbar(support[static_cast<size_t>(a)]);
    }
    for (int c = 0; c < k; c++) A(k, c) = 1.0;
    b(k) = game.mass;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) continue;
    Eigen::VectorXd sol = lu.solve(b);
    Vec z(static_cast<size_t>(n), 0.0);
    bool feasible = true;
    for (int a = 0; a < k; a++) {
      double s = sol(a);
      if (s < -1e-10) {
        feasible = false;
        break;
      }
      z[static_cast<size_t>(support[static_cast<size_t>(a)])] = std::max(s, 0.0);
    }
    if (!feasible) continue;
    SimplexState zs = project_to_simplex(std::move(z), game.mass);
    if (is_nash(game, zs, tol)) out.points.push_back(std::move(zs));
  }
}

void nash_set_general(const PopulationGame& game, int grid_resolution, double tol,
                      EquilibriumSet& out) {
  if (game.n != 3) throw std::invalid_argument("nash_set: general-game grid scan supports n = 3 only");
  if (grid_resolution < 50) throw std::invalid_argument("nash_set: grid_resolution must be >= 50");
  Protocol smith = smith_protocol(game.n);

  // residual norm on the lattice, indexed by (i, j) with i + j <= d
  const int d = grid_resolution;
  auto idx = [d](int i, int j) { return i * (d + 1) + j; };
  std::vector<double> vnorm(static_cast<size_t>((d + 1) * (d + 1)),
                            std::numeric_limits<double>::infinity());
  for (int i = 0; i <= d; i++) {
    for (int j = 0; j + i <= d; j++) {
      Vec e = {game.mass * i / d, game.mass * j / d, 0.0};
      e[2] = std::max(game.mass - e[0] - e[1], 0.0);
      SimplexState z(std::move(e), game.mass);
      vnorm[static_cast<size_t>(idx(i, j))] = sup_norm(mean_dynamic(smith, z, payoff(game, z)).entries);
    }
  }
  // local minima over lattice neighbours are the refinement seeds
  const int di[6] = {1, -1, 0, 0, 1, -1};
  const int dj[6] = {0, 0, 1, -1, -1, 1};
  double payoff_scale = std::max(1.0, max_payoff_norm(game, 60));
  double stat_tol = 1e-11 * payoff_scale * game.mass;
  for (int i = 0; i <= d; i++) {
    for (int j = 0; j + i <= d; j++) {
      double v0 = vnorm[static_cast<size_t>(idx(i, j))];
      bool is_min = true;
      for (int s = 0; s < 6 && is_min; s++) {
        int ni = i + di[s], nj = j + dj[s];
        if (ni < 0 || nj < 0 || ni + nj > d) continue;
        if (vnorm[static_cast<size_t>(idx(ni, nj))] < v0) is_min = false;
      }
      if (!is_min) continue;
      Vec z = {game.mass * i / d, game.mass * j / d, 0.0};
      z[2] = std::max(game.mass - z[0] - z[1], 0.0);
      if (!refine_by_smith_flow(game, z, stat_tol, 20000)) continue;
      SimplexState zs(z, game.mass);
      if (is_nash(game, zs, tol)) out.points.push_back(std::move(zs));
    }
  }
}

}  // namespace

bool is_nash(const PopulationGame& game, const SimplexState& z, double tol) {
  if (tol < 0.0) throw std::invalid_argument("is_nash: tol must be nonnegative");
  PayoffVector r = payoff(game, z);
  double mx = *std::max_element(r.entries.begin(), r.entries.end());
  for (int i = 0; i < game.n; i++)
    if (z[i] > tol && r[i] < mx - tol) return false;
  return true;
}

EquilibriumSet nash_set(const PopulationGame& game, int grid_resolution, double tol) {
  EquilibriumSet out;
  out.kind = EquilibriumKind::nash;
  out.tolerance = tol;
  if (game.structure == GameStructure::affine)
    nash_set_affine(game, tol, out);
  else
    nash_set_general(game, grid_resolution, tol, out);
  out.points = dedup_sorted(std::move(out.points), 1e-4);
  if (out.points.empty()) {
    out.search_failed = true;
    out.note = "no stationary candidate passed the Nash membership test";
  }
  return out;
}

EquilibriumSet perturbed_equilibrium(const PopulationGame& game, double eta, double damping,
                                     double tol, int max_iter) {
  if (!(eta > 0.0)) throw std::invalid_argument("perturbed_equilibrium: eta must be positive");
  if (!(damping > 0.0) || damping > 1.0)
    throw std::invalid_argument("perturbed_equilibrium: damping must be in (0, 1]");
  EquilibriumSet out;
  out.kind = EquilibriumKind::perturbed;
  out.tolerance = tol;

  const int n = game.n;
  const double m = game.mass;
  std::vector<SimplexState> starts;
  starts.push_back(uniform_state(n, m));
  for (int i = 0; i < n; i++) {
    Vec e(static_cast<size_t>(n), 0.1 * m / n);
    e[static_cast<size_t>(i)] += 0.9 * m;
    double sum = 0.0;
    for (double x : e) sum += x;
    for (double& x : e) x *= m / sum;
    starts.emplace_back(std::move(e), m);
  }

  for (const auto& start : starts) {
    Vec z = start.entries;
    double kappa = damping;  // halved whenever a step grows the residual
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; it++) {
      SimplexState zs(z, m);
      SimplexState target = logit_choice(payoff(game, zs), eta);
      residual = 0.0;
      for (int i = 0; i < n; i++)
        residual = std::max(residual, std::abs(z[static_cast<size_t>(i)] - m * target[i]));
      if (residual <= tol) break;
      Vec cand(z.size());
      for (int i = 0; i < n; i++)
        cand[static_cast<size_t>(i)] =
            (1.0 - kappa) * z[static_cast<size_t>(i)] + kappa * m * target[i];
      SimplexState cs(cand, m);
      SimplexState ct = logit_choice(payoff(game, cs), eta);
      double cand_residual = 0.0;
      for (int i = 0; i < n; i++)
        cand_residual = std::max(cand_residual, std::abs(cand[static_cast<size_t>(i)] - m * ct[i]));
      if (cand_residual <= residual) {
        z = std::move(cand);
      } else {
        kappa *= 0.5;
        if (kappa < 1e-8) break;
      }
    }
    if (residual <= tol) out.points.emplace_back(z, m);
  }
  out.points = dedup_sorted(std::move(out.points), 1e-4);
  if (out.points.empty()) {
    out.search_failed = true;
    out.note = "logit fixed-point iteration did not converge from any start";
  }
  return out;
}

}  // namespace popdyn
