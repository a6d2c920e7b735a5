#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "popdyn/types.hpp"

namespace popdyn {

enum class ProtocolFamily { ept, ipc, pbr };

// A revision protocol in one of three families. Immutable; mean_dynamic is
// a pure function of (protocol, z, r), so concurrent use is safe.
//
//   EPT: switch rates depend on the target's excess payoff, T_ij = tau_j(rhat).
//   IPC: rates depend on pairwise payoff differences, T_ij = tau_j(r_j - r_i).
//   PBR: rates are a perturbed-best-response choice rule, T_ij = C_j(r);
//        only the logit rule (noise level eta) is supported.
struct Protocol {
  ProtocolFamily family = ProtocolFamily::ept;
  int n = 0;
  std::string name = "custom";

  // EPT: either full-vector rate maps or, when separable, scalar maps of the
  // target's own excess payoff.
  std::vector<std::function<double(const Vec&)>> ept_rates;
  bool separable = false;
  std::vector<std::function<double(double)>> scalar_rates;  // EPT separable or IPC

  double eta = 0.0;  // PBR logit noise level
};

Protocol bnn_protocol(int n);
Protocol smith_protocol(int n);
Protocol logit_protocol(int n, double eta);
Protocol separable_ept_protocol(int n, std::vector<std::function<double(double)>> rates,
                                const std::string& name = "custom_ept");
Protocol ept_protocol(int n, std::vector<std::function<double(const Vec&)>> rates,
                      const std::string& name = "custom_ept");
Protocol ipc_protocol(int n, std::vector<std::function<double(double)>> rates,
                      const std::string& name = "custom_ipc");

// rhat_i = r_i - (1/m) sum_j r_j z_j
PayoffVector excess_payoff(const SimplexState& z, const PayoffVector& r);

// Max-shifted softmax of r / eta; entries strictly positive, unit mass.
SimplexState logit_choice(const PayoffVector& r, double eta);

// The mean dynamic V(z, r) of the protocol; PBR uses the closed form
// m * C(r) - z, which agrees with the double sum because choice rates do
// not depend on the current strategy.
TangentVector mean_dynamic(const Protocol& protocol, const SimplexState& z, const PayoffVector& r);

// Row i of the switch-rate matrix T(r, z); the diagonal entry is reported
// by the same formula but never contributes to the dynamic.
Vec protocol_rate_row(const Protocol& protocol, int i, const PayoffVector& r, const SimplexState& z);

// Indices i with r_i >= max(r) - tol; ties return all maximizers.
std::vector<int> best_response_set(const PayoffVector& r, double tol = 1e-9);

// Brute-force double-sum evaluation of the mean dynamic from the rate
// matrix; regression reference for the family-specific fast paths.
Vec mean_dynamic_double_sum(const Protocol& protocol, const SimplexState& z, const PayoffVector& r);

}  // namespace popdyn
