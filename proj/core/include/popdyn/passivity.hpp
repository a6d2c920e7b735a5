#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "popdyn/closedloop.hpp"
#include "popdyn/edm.hpp"
#include "popdyn/games.hpp"
#include "popdyn/types.hpp"

namespace popdyn {

enum class StorageKind { bnn, separable_ept, ipc_numeric, smith, pbr_logit };

// A delta-storage function S(z, r) for one EDM family. Closed forms for
// bnn / smith / pbr_logit; adaptive quadrature of the scalar rate maps for
// the separable_ept and ipc_numeric kinds.
struct StorageFunction {
  StorageKind kind = StorageKind::bnn;
  int n = 0;
  double eta = 0.0;  // pbr_logit noise level
  std::vector<std::function<double(double)>> rates;  // separable_ept / ipc_numeric
};

StorageFunction bnn_storage(int n);
StorageFunction smith_storage(int n);
StorageFunction logit_storage(int n, double eta);
StorageFunction separable_ept_storage(int n, std::vector<std::function<double(double)>> rates);
StorageFunction ipc_storage(int n, std::vector<std::function<double(double)>> rates);

double storage_eval(const StorageFunction& sf, const SimplexState& z, const PayoffVector& r);

enum class AntistorageKind { zero_memoryless, affine_quadratic, legendre_smoothing };

// A delta-antistorage function L(z, s) for one PDM class.
//   zero_memoryless:    L = 0 (contractive memoryless PDM)
//   affine_quadratic:   L = -scale (Fz + rbar - s)^T F^-1 (Fz + rbar - s),
//                       F symmetric negative definite
//   legendre_smoothing: L = alpha [ f*(s) - (f(z) - s^T z) ] for a strictly
//                       concave potential f; closed-form conjugate for
//                       quadratic potentials, box-search fallback otherwise
struct AntistorageFunction {
  AntistorageKind kind = AntistorageKind::zero_memoryless;
  int n = 0;
  Mat matrix;  // affine payoff matrix / quadratic potential Hessian
  Vec offset;
  double alpha = 1.0;
  double scale = 1.0;
  bool numeric_fallback = false;
  std::function<double(const Vec&)> potential;  // fallback path only
};

AntistorageFunction zero_antistorage(int n);
AntistorageFunction affine_quadratic_antistorage(const Mat& matrix, const Vec& offset,
                                                 double scale = 1.0);

// Constructs the affine-quadratic antistorage whose scale closes the
// pointwise antipassivity inequality for this PDM's output gains: with
// gf = mu0 + alpha mu2 and gq = mu1 - alpha mu2 the form
//   gf udot^T F udot + (gq alpha - 2c) udot^T v + 2 c alpha v^T F^-1 v
// must be negative semidefinite over (udot, v); gf = 0 forces
// c = gq alpha / 2 exactly, otherwise c is found by an eigenvalue scan.
// Throws std::invalid_argument when no scale closes the certificate.
AntistorageFunction certified_affine_antistorage(const PdmModel& pdm);
AntistorageFunction legendre_smoothing_antistorage(const Mat& hessian, const Vec& linear,
                                                   double alpha);
AntistorageFunction legendre_smoothing_antistorage_numeric(std::function<double(const Vec&)> potential,
                                                           int n, double alpha);

double antistorage_eval(const AntistorageFunction& af, const SimplexState& z, const PdmState& s);

// Largest eigenvalue of Phi F Phi (Phi = centering projection); requires
// Phi F Phi symmetric within 1e-9.
double lambda_star(const Mat& f_matrix);

// nu* estimate: max over a barycentric grid of the largest tangent-space
// eigenvalue of the symmetrized Jacobian, clamped at 0 (n = 3 only).
double memoryless_deficit(const PopulationGame& game, int grid_resolution = 200);

// Logit surplus bound: min over an interior grid (shares >= 1/(4 g)) of the
// smallest tangent-space eigenvalue of eta diag(1/z_i); lower-bounds the
// true surplus on the sampled region (n = 3, unit mass).
double pbr_surplus_bound(double eta, int grid_resolution = 50);

struct PassivityReport {
  double max_violation = 0.0;
  double tolerance = 0.0;
  double surplus_or_deficit = 0.0;
  bool pass = false;
};

// Finite-difference gradient of S in r against the mean dynamic at random
// interior samples (the differential characterization of delta-passivity).
PassivityReport check_storage_gradient(const StorageFunction& sf, const Protocol& protocol,
                                       int samples, uint64_t seed = 0x9e3779b97f4a7c15ull,
                                       double fd_step = 1e-6, double tol = 1e-5);

// Discrete check of the delta-passivity inequality over every grid
// sub-interval, trapezoidal quadrature; violations below
// 10 h^2 (1 + max||xdot|| max||pdot||) are attributed to quadrature error.
PassivityReport check_delta_passivity(const Trajectory& traj, const StorageFunction& sf,
                                      double eta);

// Mirror check of the delta-antipassivity inequality (input u = x, output p).
PassivityReport check_delta_antipassivity(const Trajectory& traj, const AntistorageFunction& af,
                                          double nu);

}  // namespace popdyn
