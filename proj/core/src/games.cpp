#include "popdyn/games.hpp"

#include <algorithm>
#include <cmath>

namespace popdyn {

namespace {

Vec mat_vec(const Mat& m, const Vec& z, const Vec& offset) {
  Vec out(m.size(), 0.0);
  for (size_t i = 0; i < m.size(); i++) {
    double s = offset[i];
    for (size_t j = 0; j < z.size(); j++) s += m[i][j] * z[j];
    out[i] = s;
  }
  return out;
}

double logistic(double u) {
  // stable on both tails
  if (u >= 0.0) {
    double e = std::exp(-u);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(u);
  return e / (1.0 + e);
}

double logistic_derivative(double u) {
  double s = logistic(u);
  return s * (1.0 - s);
}

}  // namespace

PopulationGame affine_game(Mat matrix, Vec offset, double mass) {
  int n = static_cast<int>(matrix.size());
  if (n < 1) throw std::invalid_argument("affine_game: empty matrix");
  for (const auto& row : matrix)
    if (static_cast<int>(row.size()) != n)
      throw std::invalid_argument("affine_game: matrix must be square");
  if (static_cast<int>(offset.size()) != n)
    throw std::invalid_argument("affine_game: offset dimension mismatch");

  PopulationGame g;
  g.n = n;
  g.mass = mass;
  g.structure = GameStructure::affine;
  g.name = "affine";
  g.matrix = matrix;
  g.offset = offset;
  g.payoff_fn = [matrix, offset](const Vec& z) { return mat_vec(matrix, z, offset); };
  g.jacobian_fn = [matrix](const Vec&) { return matrix; };
  return g;
}

PopulationGame diagonal_separable_game(std::vector<std::function<double(double)>> reward,
                                       std::vector<std::function<double(double)>> reward_derivative,
                                       double mass, const std::string& name) {
  int n = static_cast<int>(reward.size());
  if (n < 1) throw std::invalid_argument("diagonal_separable_game: no reward functions");
  if (!reward_derivative.empty() && static_cast<int>(reward_derivative.size()) != n)
    throw std::invalid_argument("diagonal_separable_game: derivative count mismatch");

  PopulationGame g;
  g.n = n;
  g.mass = mass;
  g.structure = GameStructure::diagonal_separable;
  g.name = name;
  g.reward = reward;
  g.reward_derivative = reward_derivative;
  g.payoff_fn = [reward](const Vec& z) {
    Vec out(z.size());
    for (size_t i = 0; i < z.size(); i++) out[i] = reward[i](z[i]);
    return out;
  };
  if (!reward_derivative.empty()) {
    g.jacobian_fn = [reward_derivative, n](const Vec& z) {
      Mat jac(static_cast<size_t>(n), Vec(static_cast<size_t>(n), 0.0));
      for (int i = 0; i < n; i++)
        jac[static_cast<size_t>(i)][static_cast<size_t>(i)] =
            reward_derivative[static_cast<size_t>(i)](z[static_cast<size_t>(i)]);
      return jac;
    };
  }
  return g;
}

PopulationGame general_game(int n, std::function<Vec(const Vec&)> payoff_fn, double mass,
                            const std::string& name) {
  if (n < 1) throw std::invalid_argument("general_game: n must be >= 1");
  PopulationGame g;
  g.n = n;
  g.mass = mass;
  g.structure = GameStructure::general;
  g.name = name;
  g.payoff_fn = std::move(payoff_fn);
  return g;
}

PopulationGame congestion_example() {
  // Three routes over five links; link 2 has twice the delay slope.
  Mat m = {{-3.0, 0.0, -1.0}, {0.0, -2.0, -1.0}, {-1.0, -1.0, -3.0}};
  Vec r(3, 0.0);
  PopulationGame g = affine_game(m, r, 1.0);
  g.name = "congestion_example";
  return g;
}

PopulationGame demand_response_example() {
  Mat m = {{-10.0, 0.0, 0.0}, {0.0, -5.0, 0.0}, {0.0, 0.0, -1.0}};
  Vec r = {-0.01, -0.1, -1.0};
  PopulationGame g = affine_game(m, r, 1.0);
  g.name = "demand_response_example";
  return g;
}

PopulationGame task_allocation_example() {
  // Identical rewards per task: a sharp onset at share 0.2 followed by a
  // slow decline past share 0.5.
  auto reward = [](double s) { return logistic(100.0 * (s - 0.2)) - logistic(20.0 * (s - 0.5)); };
  auto reward_d = [](double s) {
    return 100.0 * logistic_derivative(100.0 * (s - 0.2)) - 20.0 * logistic_derivative(20.0 * (s - 0.5));
  };
  std::vector<std::function<double(double)>> rs(3, reward);
  std::vector<std::function<double(double)>> rds(3, reward_d);
  return diagonal_separable_game(rs, rds, 1.0, "task_allocation_example");
}

PayoffVector payoff(const PopulationGame& game, const SimplexState& z) {
  if (z.dim() != game.n) throw std::invalid_argument("payoff: dimension mismatch");
  Vec p = game.payoff_fn(z.entries);
  if (!all_finite(p)) throw NumericalError("payoff: non-finite payoff");
  return PayoffVector(std::move(p));
}

Mat finite_difference_jacobian(const PopulationGame& game, const Vec& z, double fd_step) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("finite_difference_jacobian: fd_step must be positive");
  const int n = game.n;
  Mat jac(static_cast<size_t>(n), Vec(static_cast<size_t>(n), 0.0));
  Vec zp = z, zm = z;
  for (int j = 0; j < n; j++) {
    zp[static_cast<size_t>(j)] = z[static_cast<size_t>(j)] + fd_step;
    zm[static_cast<size_t>(j)] = z[static_cast<size_t>(j)] - fd_step;
    Vec fp = game.payoff_fn(zp);
    Vec fm = game.payoff_fn(zm);
    if (!all_finite(fp) || !all_finite(fm))
      throw NumericalError("finite_difference_jacobian: non-finite payoff during perturbation");
    for (int i = 0; i < n; i++)
      jac[static_cast<size_t>(i)][static_cast<size_t>(j)] =
          (fp[static_cast<size_t>(i)] - fm[static_cast<size_t>(i)]) / (2.0 * fd_step);
    zp[static_cast<size_t>(j)] = z[static_cast<size_t>(j)];
    zm[static_cast<size_t>(j)] = z[static_cast<size_t>(j)];
  }
  return jac;
}

Mat jacobian(const PopulationGame& game, const SimplexState& z, double fd_step) {
  if (z.dim() != game.n) throw std::invalid_argument("jacobian: dimension mismatch");
  if (game.has_analytic_jacobian()) return game.jacobian_fn(z.entries);
  return finite_difference_jacobian(game, z.entries, fd_step);
}

std::vector<SimplexState> barycentric_grid(int resolution, double mass, const GridOptions& opts) {
  if (resolution < 1) throw std::invalid_argument("barycentric_grid: resolution must be >= 1");
  std::vector<SimplexState> pts;
  const int d = resolution;
  for (int i = 0; i <= d; i++) {
    for (int j = 0; j + i <= d; j++) {
      int k = d - i - j;
      if (opts.interior_only && (i == 0 || j == 0 || k == 0)) continue;
      if (!opts.include_center && i == j && j == k) continue;
      Vec e = {mass * i / d, mass * j / d, mass * k / d};
      // close the mass sum exactly, guarding the k = 0 rounding case
      e[2] = std::max(mass - e[0] - e[1], 0.0);
      pts.emplace_back(std::move(e), mass);
    }
  }
  return pts;
}

double max_payoff_norm(const PopulationGame& game, int grid_resolution) {
  if (game.n != 3) throw std::invalid_argument("max_payoff_norm: grid scan supports n = 3 only");
  double best = 0.0;
  for (const auto& z : barycentric_grid(grid_resolution, game.mass))
    best = std::max(best, sup_norm(game.payoff_fn(z.entries)));
  return best;
}

}  // namespace popdyn
