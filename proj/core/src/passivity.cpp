#include "popdyn/passivity.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace popdyn {

namespace {

// Adaptive Simpson quadrature for the scalar rate integrals.
double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_rate(const std::function<double(double)>& f, double upper) {
  if (upper == 0.0) return 0.0;
  double a = 0.0, b = upper, sign = 1.0;
  if (upper < 0.0) {
    a = upper;
    b = 0.0;
    sign = -1.0;
  }
  double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return sign * simpson(f, a, b, fa, fm, fb, whole, 1e-12, 40);
}

double logsumexp_scaled(const Vec& r, double eta) {
  double mx = *std::max_element(r.begin(), r.end());
  double s = 0.0;
  for (double x : r) s += std::exp((x - mx) / eta);
  return mx / eta + std::log(s);
}

Eigen::MatrixXd to_eigen(const Mat& m) {
  const int n = static_cast<int>(m.size());
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; i++) {
    if (static_cast<int>(m[static_cast<size_t>(i)].size()) != n)
      throw std::invalid_argument("matrix must be square");
    for (int j = 0; j < n; j++) out(i, j) = m[static_cast<size_t>(i)][static_cast<size_t>(j)];
  }
  return out;
}

// Orthonormal basis of the tangent subspace (zero-sum vectors) for n = 3.
Eigen::MatrixXd tangent_basis3() {
  Eigen::MatrixXd b(3, 2);
  b << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(6.0),
      -1.0 / std::sqrt(2.0), 1.0 / std::sqrt(6.0),
      0.0, -2.0 / std::sqrt(6.0);
  return b;
}

Vec excess_payoff_vec(const Vec& z, const Vec& r, double mass) {
  double avg = 0.0;
  for (size_t i = 0; i < z.size(); i++) avg += r[i] * z[i];
  avg /= mass;
  Vec rhat(r.size());
  for (size_t i = 0; i < r.size(); i++) rhat[i] = r[i] - avg;
  return rhat;
}

double storage_eval_raw(const StorageFunction& sf, const Vec& z, const Vec& r, double mass) {
  const int n = sf.n;
  switch (sf.kind) {
    case StorageKind::bnn: {
      Vec rhat = excess_payoff_vec(z, r, mass);
      double s = 0.0;
      for (double x : rhat) {
        double pos = std::max(x, 0.0);
        s += pos * pos;
      }
      return 0.5 * mass * s;
    }
    case StorageKind::separable_ept: {
      Vec rhat = excess_payoff_vec(z, r, mass);
      double s = 0.0;
      for (int i = 0; i < n; i++)
        s += integrate_rate(sf.rates[static_cast<size_t>(i)], rhat[static_cast<size_t>(i)]);
      return mass * s;
    }
    case StorageKind::smith: {
      double s = 0.0;
      for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++) {
          double d = std::max(r[static_cast<size_t>(j)] - r[static_cast<size_t>(i)], 0.0);
          s += z[static_cast<size_t>(i)] * d * d;
        }
      return 0.5 * s;
    }
    case StorageKind::ipc_numeric: {
      double s = 0.0;
      for (int i = 0; i < n; i++)
        for (int j = 0; j < n; j++)
          s += z[static_cast<size_t>(i)] *
               integrate_rate(sf.rates[static_cast<size_t>(j)],
                              r[static_cast<size_t>(j)] - r[static_cast<size_t>(i)]);
      return s;
    }
    case StorageKind::pbr_logit: {
      // eta ln sum exp(r/eta) scaled to mass m, minus z^T r, plus the
      // entropy perturbation; 0 ln 0 reads as 0 on the boundary.
      double value = mass * sf.eta * logsumexp_scaled(r, sf.eta) - mass * sf.eta * std::log(mass);
      for (int i = 0; i < n; i++) {
        auto iu = static_cast<size_t>(i);
        value -= z[iu] * r[iu];
        if (z[iu] > 0.0) value += sf.eta * z[iu] * std::log(z[iu]);
      }
      return value;
    }
  }
  throw std::invalid_argument("storage_eval: unknown kind");
}

}  // namespace

StorageFunction bnn_storage(int n) {
  StorageFunction s;
  s.kind = StorageKind::bnn;
  s.n = n;
  return s;
}

StorageFunction smith_storage(int n) {
  StorageFunction s;
  s.kind = StorageKind::smith;
  s.n = n;
  return s;
}

StorageFunction logit_storage(int n, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("logit_storage: eta must be positive");
  StorageFunction s;
  s.kind = StorageKind::pbr_logit;
  s.n = n;
  s.eta = eta;
  return s;
}

StorageFunction separable_ept_storage(int n, std::vector<std::function<double(double)>> rates) {
  if (static_cast<int>(rates.size()) != n)
    throw std::invalid_argument("separable_ept_storage: rate count mismatch");
  StorageFunction s;
  s.kind = StorageKind::separable_ept;
  s.n = n;
  s.rates = std::move(rates);
  return s;
}

StorageFunction ipc_storage(int n, std::vector<std::function<double(double)>> rates) {
  if (static_cast<int>(rates.size()) != n)
    throw std::invalid_argument("ipc_storage: rate count mismatch");
  StorageFunction s;
  s.kind = StorageKind::ipc_numeric;
  s.n = n;
  s.rates = std::move(rates);
  return s;
}

double storage_eval(const StorageFunction& sf, const SimplexState& z, const PayoffVector& r) {
  if (z.dim() != sf.n || r.dim() != sf.n)
    throw std::invalid_argument("storage_eval: dimension mismatch");
  double v = storage_eval_raw(sf, z.entries, r.entries, z.mass);
  if (!std::isfinite(v)) throw NumericalError("storage_eval: non-finite value");
  return v;
}

AntistorageFunction zero_antistorage(int n) {
  AntistorageFunction a;
  a.kind = AntistorageKind::zero_memoryless;
  a.n = n;
  return a;
}

AntistorageFunction affine_quadratic_antistorage(const Mat& matrix, const Vec& offset,
                                                 double scale) {
  const int n = static_cast<int>(matrix.size());
  Eigen::MatrixXd f = to_eigen(matrix);
  if ((f - f.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("affine_quadratic_antistorage: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
  if (es.eigenvalues().maxCoeff() >= -1e-12)
    throw std::invalid_argument("affine_quadratic_antistorage: matrix must be negative definite");
  if (!(scale > 0.0))
    throw std::invalid_argument("affine_quadratic_antistorage: scale must be positive");
  AntistorageFunction a;
  a.kind = AntistorageKind::affine_quadratic;
  a.n = n;
  a.matrix = matrix;
  a.offset = offset;
  a.scale = scale;
  return a;
}

AntistorageFunction certified_affine_antistorage(const PdmModel& pdm) {
  const PopulationGame& game = pdm.game;
  if (game.structure != GameStructure::affine)
    throw std::invalid_argument("certified_affine_antistorage: requires an affine game");
  const int n = game.n;
  Eigen::MatrixXd f = to_eigen(game.matrix);
  if ((f - f.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("certified_affine_antistorage: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ef(f);
  if (ef.eigenvalues().maxCoeff() >= -1e-12)
    throw std::invalid_argument("certified_affine_antistorage: matrix must be negative definite");

  const double alpha = (pdm.kind == PdmKind::memoryless) ? 1.0 : pdm.alpha;
  const double gf = (pdm.kind == PdmKind::memoryless) ? 1.0 : pdm.output_game_gain();
  const double gq = (pdm.kind == PdmKind::memoryless) ? 0.0 : pdm.output_state_gain();

  if (std::abs(gf) < 1e-14) {
    if (!(gq > 0.0))
      throw std::invalid_argument("certified_affine_antistorage: degenerate output gains");
    return affine_quadratic_antistorage(game.matrix, game.offset, 0.5 * gq * alpha);
  }

  // tangent basis for the population side; the filter residual is free in R^n
  Eigen::MatrixXd basis(n, n - 1);
  for (int c = 0; c < n - 1; c++) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v(c) = 1.0;
    v(c + 1) = -1.0;
    basis.col(c) = v;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n - 1);

  Eigen::MatrixXd finv = f.fullPivLu().inverse();
  auto worst_eig = [&](double c) {
    Eigen::MatrixXd m(2 * n - 1, 2 * n - 1);
    m.topLeftCorner(n - 1, n - 1) = gf * (q.transpose() * f * q);
    m.topRightCorner(n - 1, n) = 0.5 * (gq * alpha - 2.0 * c) * q.transpose();
    m.bottomLeftCorner(n, n - 1) = m.topRightCorner(n - 1, n).transpose();
    m.bottomRightCorner(n, n) = 2.0 * c * alpha * finv;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    return es.eigenvalues().maxCoeff();
  };

  double best_c = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 4000; k++) {
    double c = 0.01 * k;
    double w = worst_eig(c);
    if (w < best) {
      best = w;
      best_c = c;
    }
  }
  if (best > 1e-9)
    throw std::invalid_argument(
        "certified_affine_antistorage: no scale closes the certificate (best excess " +
        std::to_string(best) + ")");
  return affine_quadratic_antistorage(game.matrix, game.offset, best_c);
}

AntistorageFunction legendre_smoothing_antistorage(const Mat& hessian, const Vec& linear,
                                                   double alpha) {
  const int n = static_cast<int>(hessian.size());
  Eigen::MatrixXd f = to_eigen(hessian);
  if ((f - f.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("legendre_smoothing_antistorage: Hessian must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
  if (es.eigenvalues().maxCoeff() >= -1e-12)
    throw std::invalid_argument("legendre_smoothing_antistorage: potential must be strictly concave");
  if (!(alpha > 0.0)) throw std::invalid_argument("legendre_smoothing_antistorage: alpha must be positive");
  AntistorageFunction a;
  a.kind = AntistorageKind::legendre_smoothing;
  a.n = n;
  a.matrix = hessian;
  a.offset = linear;
  a.alpha = alpha;
  return a;
}

AntistorageFunction legendre_smoothing_antistorage_numeric(std::function<double(const Vec&)> potential,
                                                           int n, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("legendre_smoothing_antistorage: alpha must be positive");
  AntistorageFunction a;
  a.kind = AntistorageKind::legendre_smoothing;
  a.n = n;
  a.alpha = alpha;
  a.numeric_fallback = true;
  a.potential = std::move(potential);
  return a;
}

double antistorage_eval(const AntistorageFunction& af, const SimplexState& z, const PdmState& s) {
  if (z.dim() != af.n || s.dim() != af.n)
    throw std::invalid_argument("antistorage_eval: dimension mismatch");
  switch (af.kind) {
    case AntistorageKind::zero_memoryless:
      return 0.0;
    case AntistorageKind::affine_quadratic: {
      const int n = af.n;
      Eigen::MatrixXd f = to_eigen(af.matrix);
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; i++) {
        double fi = af.offset[static_cast<size_t>(i)] - s.q[static_cast<size_t>(i)];
        for (int j = 0; j < n; j++)
          fi += af.matrix[static_cast<size_t>(i)][static_cast<size_t>(j)] * z[j];
        v(i) = fi;
      }
      Eigen::VectorXd w = f.fullPivLu().solve(v);
      double val = -af.scale * v.dot(w);
      return std::max(val, 0.0);
    }
    case AntistorageKind::legendre_smoothing: {
      const int n = af.n;
      if (!af.numeric_fallback) {
        // quadratic potential f(y) = 1/2 y^T A y + b^T y with A negative
        // definite; conjugate sup_y (f(y) - s^T y) = -1/2 (s-b)^T A^-1 (s-b)
        Eigen::MatrixXd A = to_eigen(af.matrix);
        Eigen::VectorXd sb(n), zv(n), b(n);
        for (int i = 0; i < n; i++) {
          sb(i) = s.q[static_cast<size_t>(i)] - af.offset[static_cast<size_t>(i)];
          zv(i) = z[i];
          b(i) = af.offset[static_cast<size_t>(i)];
        }
        double conj = -0.5 * sb.dot(A.fullPivLu().solve(sb));
        double fz = 0.5 * zv.dot(A * zv) + b.dot(zv);
        double sz = 0.0;
        for (int i = 0; i < n; i++) sz += s.q[static_cast<size_t>(i)] * z[i];
        return std::max(af.alpha * (conj - (fz - sz)), 0.0);
      }
      // box-search conjugate over a bounding box of the simplex; the
      // conjugated domain is approximated, which is recorded on the object
      double best = -std::numeric_limits<double>::infinity();
      const int g = 80;
      Vec y(static_cast<size_t>(n), 0.0);
      if (n != 3) throw std::invalid_argument("antistorage_eval: numeric fallback supports n = 3 only");
      for (int i = 0; i <= g; i++)
        for (int j = 0; i + j <= g; j++) {
          y[0] = z.mass * i / g;
          y[1] = z.mass * j / g;
          y[2] = z.mass - y[0] - y[1];
          double val = af.potential(y);
          for (int t = 0; t < n; t++) val -= s.q[static_cast<size_t>(t)] * y[static_cast<size_t>(t)];
          best = std::max(best, val);
        }
      double fz = af.potential(z.entries);
      double sz = 0.0;
      for (int i = 0; i < n; i++) sz += s.q[static_cast<size_t>(i)] * z[i];
      return std::max(af.alpha * (best - (fz - sz)), 0.0);
    }
  }
  throw std::invalid_argument("antistorage_eval: unknown kind");
}

double lambda_star(const Mat& f_matrix) {
  const int n = static_cast<int>(f_matrix.size());
  Eigen::MatrixXd f = to_eigen(f_matrix);
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(n, n) -
                        Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd pfp = phi * f * phi;
  if ((pfp - pfp.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("lambda_star: Phi F Phi is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (pfp + pfp.transpose()));
  return es.eigenvalues().maxCoeff();
}

double memoryless_deficit(const PopulationGame& game, int grid_resolution) {
  if (game.n != 3) throw std::invalid_argument("memoryless_deficit: grid scan supports n = 3 only");
  Eigen::MatrixXd basis = tangent_basis3();
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& z : barycentric_grid(grid_resolution, game.mass)) {
    Mat jac = jacobian(game, z);
    Eigen::MatrixXd j = to_eigen(jac);
    Eigen::MatrixXd sym = 0.5 * (j + j.transpose());
    Eigen::Matrix2d t = basis.transpose() * sym * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(t);
    worst = std::max(worst, es.eigenvalues().maxCoeff());
  }
  return std::max(worst, 0.0);
}

double pbr_surplus_bound(double eta, int grid_resolution) {
  if (!(eta > 0.0)) throw std::invalid_argument("pbr_surplus_bound: eta must be positive");
  if (grid_resolution < 2) throw std::invalid_argument("pbr_surplus_bound: grid_resolution must be >= 2");
  Eigen::MatrixXd basis = tangent_basis3();
  const double floor = 1.0 / (4.0 * grid_resolution);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& z : barycentric_grid(grid_resolution, 1.0)) {
    // clamp lattice points (including boundary ones) onto the sampled
    // region with shares >= 1/(4 g)
    Vec zi = z.entries;
    double sum = 0.0;
    for (double& s : zi) {
      s = std::max(s, floor);
      sum += s;
    }
    Eigen::Matrix3d hess = Eigen::Matrix3d::Zero();
    for (int i = 0; i < 3; i++) hess(i, i) = eta * sum / zi[static_cast<size_t>(i)];
    Eigen::Matrix2d t = basis.transpose() * hess * basis;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(t);
    best = std::min(best, es.eigenvalues().minCoeff());
  }
  return best;
}

PassivityReport check_storage_gradient(const StorageFunction& sf, const Protocol& protocol,
                                       int samples, uint64_t seed, double fd_step, double tol) {
  bool matched = (sf.kind == StorageKind::bnn && protocol.family == ProtocolFamily::ept) ||
                 (sf.kind == StorageKind::separable_ept && protocol.family == ProtocolFamily::ept) ||
                 (sf.kind == StorageKind::smith && protocol.family == ProtocolFamily::ipc) ||
                 (sf.kind == StorageKind::ipc_numeric && protocol.family == ProtocolFamily::ipc) ||
                 (sf.kind == StorageKind::pbr_logit && protocol.family == ProtocolFamily::pbr);
  if (!matched || sf.n != protocol.n)
    throw std::invalid_argument("check_storage_gradient: storage and protocol are not a matched pair");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> payoff_dist(-2.0, 2.0);
  std::exponential_distribution<double> expo(1.0);
  const int n = sf.n;

  PassivityReport rep;
  rep.tolerance = tol;
  for (int s = 0; s < samples; s++) {
    Vec ze(static_cast<size_t>(n));
    double sum = 0.0;
    for (auto& x : ze) {
      x = expo(rng) + 0.05;  // interior sample
      sum += x;
    }
    for (auto& x : ze) x /= sum;
    SimplexState z(ze, 1.0);
    Vec re(static_cast<size_t>(n));
    for (auto& x : re) x = payoff_dist(rng);
    PayoffVector r(re);

    Vec v = mean_dynamic(protocol, z, r).entries;
    for (int k = 0; k < n; k++) {
      Vec rp = re, rm = re;
      rp[static_cast<size_t>(k)] += fd_step;
      rm[static_cast<size_t>(k)] -= fd_step;
      double grad = (storage_eval(sf, z, PayoffVector(rp)) - storage_eval(sf, z, PayoffVector(rm))) /
                    (2.0 * fd_step);
      rep.max_violation = std::max(rep.max_violation, std::abs(grad - v[static_cast<size_t>(k)]));
    }
  }
  rep.pass = rep.max_violation <= tol;
  return rep;
}

namespace {

// Shared sub-interval machinery: given the pointwise values d_k of
// (certificate - cumulative integral), the largest inequality violation over
// all sub-intervals [t_j, t_k], j <= k, is max_k (d_k - min_{j<=k} d_j).
PassivityReport subinterval_check(const std::vector<double>& d, double tol) {
  PassivityReport rep;
  rep.tolerance = tol;
  double running_min = std::numeric_limits<double>::infinity();
  for (double v : d) {
    running_min = std::min(running_min, v);
    rep.max_violation = std::max(rep.max_violation, v - running_min);
  }
  rep.pass = rep.max_violation <= tol;
  return rep;
}

double quadrature_tolerance(const Trajectory& traj) {
  double mx = 0.0, mp = 0.0;
  for (int k = 0; k < traj.samples(); k++) {
    mx = std::max(mx, sup_norm(traj.xdot[static_cast<size_t>(k)]));
    mp = std::max(mp, sup_norm(traj.pdot[static_cast<size_t>(k)]));
  }
  return 10.0 * traj.h * traj.h * (1.0 + mx * mp);
}

}  // namespace

PassivityReport check_delta_passivity(const Trajectory& traj, const StorageFunction& sf,
                                      double eta) {
  if (traj.samples() < 2 || traj.xdot.empty() || traj.pdot.empty())
    throw std::invalid_argument("check_delta_passivity: trajectory lacks derivative samples");
  if (sf.n != traj.n) throw std::invalid_argument("check_delta_passivity: dimension mismatch");
  const int ns = traj.samples();
  std::vector<double> g(static_cast<size_t>(ns));
  for (int k = 0; k < ns; k++) {
    auto ku = static_cast<size_t>(k);
    g[ku] = dot(traj.xdot[ku], traj.pdot[ku]) - eta * dot(traj.xdot[ku], traj.xdot[ku]);
  }
  std::vector<double> d(static_cast<size_t>(ns));
  double integral = 0.0;
  for (int k = 0; k < ns; k++) {
    auto ku = static_cast<size_t>(k);
    if (k > 0) integral += 0.5 * traj.h * (g[ku - 1] + g[ku]);
    double s = storage_eval_raw(sf, traj.x[ku], traj.p[ku], traj.mass);
    d[ku] = s - integral;
  }
  PassivityReport rep = subinterval_check(d, quadrature_tolerance(traj));
  rep.surplus_or_deficit = eta;
  return rep;
}

PassivityReport check_delta_antipassivity(const Trajectory& traj, const AntistorageFunction& af,
                                          double nu) {
  if (traj.samples() < 2 || traj.xdot.empty() || traj.pdot.empty())
    throw std::invalid_argument("check_delta_antipassivity: trajectory lacks derivative samples");
  if (af.n != traj.n) throw std::invalid_argument("check_delta_antipassivity: dimension mismatch");
  const int ns = traj.samples();
  std::vector<double> g(static_cast<size_t>(ns));
  for (int k = 0; k < ns; k++) {
    auto ku = static_cast<size_t>(k);
    g[ku] = dot(traj.pdot[ku], traj.xdot[ku]) - nu * dot(traj.xdot[ku], traj.xdot[ku]);
  }
  std::vector<double> d(static_cast<size_t>(ns));
  double integral = 0.0;
  for (int k = 0; k < ns; k++) {
    auto ku = static_cast<size_t>(k);
    if (k > 0) integral += 0.5 * traj.h * (g[ku - 1] + g[ku]);
    SimplexState z(traj.x[ku], traj.mass);
    PdmState s(traj.q[ku]);
    d[ku] = antistorage_eval(af, z, s) + integral;
  }
  PassivityReport rep = subinterval_check(d, quadrature_tolerance(traj));
  rep.surplus_or_deficit = nu;
  return rep;
}

}  // namespace popdyn
