#include "popdyn/edm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace popdyn {

namespace {

// Def. 9 requires nonnegative rates; forgive rounding-scale negatives only.
double clamp_rate(double v, const char* who) {
  if (!std::isfinite(v)) throw NumericalError(std::string(who) + ": non-finite protocol rate");
  if (v < 0.0) {
    if (v > -1e-12) return 0.0;
    throw NumericalError(std::string(who) + ": negative protocol rate " + std::to_string(v));
  }
  return v;
}

Vec excess_payoff_raw(const Vec& z, const Vec& r, double mass) {
  double avg = 0.0;
  for (size_t i = 0; i < z.size(); i++) avg += r[i] * z[i];
  avg /= mass;
  Vec rhat(r.size());
  for (size_t i = 0; i < r.size(); i++) rhat[i] = r[i] - avg;
  return rhat;
}

Vec softmax_scaled(const Vec& r, double eta) {
  double mx = *std::max_element(r.begin(), r.end());
  Vec e(r.size());
  double sum = 0.0;
  for (size_t i = 0; i < r.size(); i++) {
    e[i] = std::exp((r[i] - mx) / eta);
    sum += e[i];
  }
  for (double& x : e) x /= sum;
  return e;
}

void check_ept_acuteness(const Protocol& p) {
  // sampled check of rhat^T tau(rhat) > 0 on excess payoffs with at least
  // one positive entry
  std::mt19937_64 rng(0x5eedu);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < 200; s++) {
    Vec rhat(static_cast<size_t>(p.n));
    bool positive = false;
    for (auto& x : rhat) {
      x = unif(rng);
      if (x > 0.0) positive = true;
    }
    if (!positive) rhat[static_cast<size_t>(s % p.n)] = std::abs(rhat[static_cast<size_t>(s % p.n)]) + 0.1;
    double acute = 0.0;
    for (int j = 0; j < p.n; j++) {
      double rate = p.separable ? p.scalar_rates[static_cast<size_t>(j)](rhat[static_cast<size_t>(j)])
                                : p.ept_rates[static_cast<size_t>(j)](rhat);
      acute += rhat[static_cast<size_t>(j)] * clamp_rate(rate, "ept_protocol");
    }
    if (!(acute > 0.0))
      throw std::invalid_argument("ept_protocol: acuteness fails at a sampled excess payoff");
  }
}

void check_ipc_sign_preservation(const Protocol& p) {
  std::mt19937_64 rng(0x51d3u);
  std::uniform_real_distribution<double> unif(0.0, 10.0);
  for (int s = 0; s < 200; s++) {
    double d = unif(rng) + 1e-6;
    for (int j = 0; j < p.n; j++) {
      double pos = clamp_rate(p.scalar_rates[static_cast<size_t>(j)](d), "ipc_protocol");
      double neg = p.scalar_rates[static_cast<size_t>(j)](-d);
      double zero = p.scalar_rates[static_cast<size_t>(j)](0.0);
      if (!(pos > 0.0))
        throw std::invalid_argument("ipc_protocol: rate not positive for positive payoff difference");
      if (neg != 0.0 || zero != 0.0)
        throw std::invalid_argument("ipc_protocol: rate not zero for nonpositive payoff difference");
    }
  }
}

}  // namespace

Protocol separable_ept_protocol(int n, std::vector<std::function<double(double)>> rates,
                                const std::string& name) {
  if (n < 2) throw std::invalid_argument("separable_ept_protocol: n must be >= 2");
  if (static_cast<int>(rates.size()) != n)
    throw std::invalid_argument("separable_ept_protocol: rate count mismatch");
  Protocol p;
  p.family = ProtocolFamily::ept;
  p.n = n;
  p.name = name;
  p.separable = true;
  p.scalar_rates = std::move(rates);
  check_ept_acuteness(p);
  return p;
}

Protocol ept_protocol(int n, std::vector<std::function<double(const Vec&)>> rates,
                      const std::string& name) {
  if (n < 2) throw std::invalid_argument("ept_protocol: n must be >= 2");
  if (static_cast<int>(rates.size()) != n)
    throw std::invalid_argument("ept_protocol: rate count mismatch");
  Protocol p;
  p.family = ProtocolFamily::ept;
  p.n = n;
  p.name = name;
  p.ept_rates = std::move(rates);
  check_ept_acuteness(p);
  return p;
}

Protocol ipc_protocol(int n, std::vector<std::function<double(double)>> rates,
                      const std::string& name) {
  if (n < 2) throw std::invalid_argument("ipc_protocol: n must be >= 2");
  if (static_cast<int>(rates.size()) != n)
    throw std::invalid_argument("ipc_protocol: rate count mismatch");
  Protocol p;
  p.family = ProtocolFamily::ipc;
  p.n = n;
  p.name = name;
  p.scalar_rates = std::move(rates);
  check_ipc_sign_preservation(p);
  return p;
}

Protocol bnn_protocol(int n) {
  std::vector<std::function<double(double)>> rates(
      static_cast<size_t>(n), [](double rhat) { return std::max(rhat, 0.0); });
  Protocol p = separable_ept_protocol(n, std::move(rates), "bnn");
  return p;
}

Protocol smith_protocol(int n) {
  std::vector<std::function<double(double)>> rates(
      static_cast<size_t>(n), [](double d) { return std::max(d, 0.0); });
  Protocol p = ipc_protocol(n, std::move(rates), "smith");
  return p;
}

Protocol logit_protocol(int n, double eta) {
  if (n < 2) throw std::invalid_argument("logit_protocol: n must be >= 2");
  if (!(eta > 0.0)) throw std::invalid_argument("logit_protocol: eta must be positive");
  Protocol p;
  p.family = ProtocolFamily::pbr;
  p.n = n;
  p.name = "logit";
  p.eta = eta;
  return p;
}

PayoffVector excess_payoff(const SimplexState& z, const PayoffVector& r) {
  if (z.dim() != r.dim()) throw std::invalid_argument("excess_payoff: dimension mismatch");
  return PayoffVector(excess_payoff_raw(z.entries, r.entries, z.mass));
}

SimplexState logit_choice(const PayoffVector& r, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("logit_choice: eta must be positive");
  return SimplexState(softmax_scaled(r.entries, eta), 1.0);
}

TangentVector mean_dynamic(const Protocol& protocol, const SimplexState& z, const PayoffVector& r) {
  if (protocol.n != z.dim() || protocol.n != r.dim())
    throw std::invalid_argument("mean_dynamic: dimension mismatch");
  const int n = protocol.n;
  const double m = z.mass;
  Vec v(static_cast<size_t>(n), 0.0);

  switch (protocol.family) {
    case ProtocolFamily::ept: {
      Vec rhat = excess_payoff_raw(z.entries, r.entries, m);
      Vec tau(static_cast<size_t>(n));
      double total = 0.0;
      for (int j = 0; j < n; j++) {
        double t = protocol.separable ? protocol.scalar_rates[static_cast<size_t>(j)](rhat[static_cast<size_t>(j)])
                                      : protocol.ept_rates[static_cast<size_t>(j)](rhat);
        tau[static_cast<size_t>(j)] = clamp_rate(t, "mean_dynamic");
        total += tau[static_cast<size_t>(j)];
      }
      for (int i = 0; i < n; i++)
        v[static_cast<size_t>(i)] = m * tau[static_cast<size_t>(i)] - z[i] * total;
      break;
    }
    case ProtocolFamily::ipc: {
      for (int i = 0; i < n; i++) {
        double in = 0.0, out = 0.0;
        for (int j = 0; j < n; j++) {
          in += z[j] * clamp_rate(protocol.scalar_rates[static_cast<size_t>(i)](r[i] - r[j]),
                                  "mean_dynamic");
          out += clamp_rate(protocol.scalar_rates[static_cast<size_t>(j)](r[j] - r[i]),
                            "mean_dynamic");
        }
        v[static_cast<size_t>(i)] = in - z[i] * out;
      }
      break;
    }
    case ProtocolFamily::pbr: {
      Vec c = softmax_scaled(r.entries, protocol.eta);
      for (int i = 0; i < n; i++) v[static_cast<size_t>(i)] = m * c[static_cast<size_t>(i)] - z[i];
      break;
    }
  }
  if (!all_finite(v)) throw NumericalError("mean_dynamic: non-finite dynamic");
  return TangentVector(std::move(v));
}

Vec protocol_rate_row(const Protocol& protocol, int i, const PayoffVector& r, const SimplexState& z) {
  if (protocol.n != z.dim() || protocol.n != r.dim() || i < 0 || i >= protocol.n)
    throw std::invalid_argument("protocol_rate_row: bad arguments");
  const int n = protocol.n;
  Vec row(static_cast<size_t>(n), 0.0);
  switch (protocol.family) {
    case ProtocolFamily::ept: {
      Vec rhat = excess_payoff_raw(z.entries, r.entries, z.mass);
      for (int j = 0; j < n; j++) {
        double t = protocol.separable ? protocol.scalar_rates[static_cast<size_t>(j)](rhat[static_cast<size_t>(j)])
                                      : protocol.ept_rates[static_cast<size_t>(j)](rhat);
        row[static_cast<size_t>(j)] = clamp_rate(t, "protocol_rate_row");
      }
      break;
    }
    case ProtocolFamily::ipc:
      for (int j = 0; j < n; j++)
        row[static_cast<size_t>(j)] =
            clamp_rate(protocol.scalar_rates[static_cast<size_t>(j)](r[j] - r[i]), "protocol_rate_row");
      break;
    case ProtocolFamily::pbr: {
      Vec c = softmax_scaled(r.entries, protocol.eta);
      for (int j = 0; j < n; j++) row[static_cast<size_t>(j)] = c[static_cast<size_t>(j)];
      break;
    }
  }
  return row;
}

std::vector<int> best_response_set(const PayoffVector& r, double tol) {
  if (tol < 0.0) throw std::invalid_argument("best_response_set: tol must be nonnegative");
  double mx = *std::max_element(r.entries.begin(), r.entries.end());
  std::vector<int> out;
  for (int i = 0; i < r.dim(); i++)
    if (r[i] >= mx - tol) out.push_back(i);
  return out;
}

Vec mean_dynamic_double_sum(const Protocol& protocol, const SimplexState& z, const PayoffVector& r) {
  const int n = protocol.n;
  Vec v(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; i++) {
    Vec row = protocol_rate_row(protocol, i, r, z);
    double out = 0.0;
    for (int j = 0; j < n; j++) out += row[static_cast<size_t>(j)];
    v[static_cast<size_t>(i)] -= z[i] * out;
    for (int j = 0; j < n; j++) {
      // inflow to j from i
      v[static_cast<size_t>(j)] += z[i] * row[static_cast<size_t>(j)];
    }
  }
  return v;
}

}  // namespace popdyn
