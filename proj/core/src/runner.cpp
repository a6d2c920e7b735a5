#include "popdyn/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include <Eigen/Dense>

namespace popdyn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  jobs = std::max(1, jobs);
  if (jobs == 1 || count <= 1) {
    for (int i = 0; i < count; i++) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(jobs, count); t++) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

bool phi_f_phi_symmetric(const Mat& m) {
  const int n = static_cast<int>(m.size());
  Eigen::MatrixXd f(n, n);
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) f(i, j) = m[static_cast<size_t>(i)][static_cast<size_t>(j)];
  Eigen::MatrixXd phi =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd pfp = phi * f * phi;
  return (pfp - pfp.transpose()).cwiseAbs().maxCoeff() <= 1e-9;
}

bool symmetric_negative_definite(const Mat& m) {
  const int n = static_cast<int>(m.size());
  Eigen::MatrixXd f(n, n);
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) f(i, j) = m[static_cast<size_t>(i)][static_cast<size_t>(j)];
  if ((f - f.transpose()).cwiseAbs().maxCoeff() > 1e-9) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (f + f.transpose()));
  return es.eigenvalues().maxCoeff() < -1e-12;
}

struct PdmCertificate {
  bool delta_antipassive = false;  // full antipassivity certified
  bool weak = false;               // at least the weak form certified
  double deficit = 0.0;
  std::string antistorage = "none";
  bool has_lambda_star = false;
  double lambda = 0.0;
};

PdmCertificate classify_pdm(const PdmModel& pdm) {
  PdmCertificate cert;
  const PopulationGame& game = stationary_game(pdm);
  if (pdm.kind == PdmKind::memoryless) {
    cert.deficit = memoryless_deficit(game);
    if (game.structure == GameStructure::affine && phi_f_phi_symmetric(game.matrix)) {
      cert.has_lambda_star = true;
      cert.lambda = lambda_star(game.matrix);
    }
    if (cert.deficit == 0.0) {
      cert.delta_antipassive = true;
      cert.weak = true;
      cert.antistorage = "zero_memoryless";
    } else {
      // positive deficits are grid-certified, which supports the weak form
      // on the sampled region only
      cert.weak = true;
    }
    return cert;
  }
  if (game.structure == GameStructure::affine && phi_f_phi_symmetric(game.matrix)) {
    cert.has_lambda_star = true;
    cert.lambda = lambda_star(game.matrix);
    double gain = pdm.output_game_gain();
    double scale = 1.0;
    for (const auto& row : game.matrix) scale = std::max(scale, sup_norm(row));
    if (cert.lambda <= 1e-10 * scale) {
      cert.weak = true;
      cert.deficit = 0.0;
      if (symmetric_negative_definite(game.matrix)) {
        cert.delta_antipassive = true;
        cert.antistorage = "affine_quadratic";
      }
    } else {
      cert.weak = true;
      cert.deficit = (gain <= 1.0) ? cert.lambda : gain * cert.lambda;
    }
    return cert;
  }
  // smoothing PDM over a strictly concave separable potential
  if (pdm.mu0 == 0.0 && pdm.mu2 == 0.0 && game.structure == GameStructure::diagonal_separable &&
      !game.reward_derivative.empty()) {
    bool concave = true;
    for (int i = 0; i < game.n && concave; i++)
      for (int s = 0; s <= 200 && concave; s++)
        if (game.reward_derivative[static_cast<size_t>(i)](game.mass * s / 200.0) >= 0.0)
          concave = false;
    if (concave) {
      cert.delta_antipassive = true;
      cert.weak = true;
      cert.antistorage = "legendre_smoothing";
      return cert;
    }
  }
  return cert;  // nothing certified
}

}  // namespace

StorageFunction storage_for_protocol(const Protocol& protocol) {
  switch (protocol.family) {
    case ProtocolFamily::ept:
      if (protocol.name == "bnn") return bnn_storage(protocol.n);
      if (protocol.separable) return separable_ept_storage(protocol.n, protocol.scalar_rates);
      throw std::invalid_argument(
          "storage_for_protocol: non-separable EPT protocols carry no constructive storage");
    case ProtocolFamily::ipc:
      if (protocol.name == "smith") return smith_storage(protocol.n);
      return ipc_storage(protocol.n, protocol.scalar_rates);
    case ProtocolFamily::pbr:
      return logit_storage(protocol.n, protocol.eta);
  }
  throw std::invalid_argument("storage_for_protocol: unknown family");
}

EquilibriumSet reference_equilibria(const PopulationGame& game, const Protocol& protocol) {
  if (protocol.family == ProtocolFamily::pbr)
    return perturbed_equilibrium(game, protocol.eta);
  return nash_set(game);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  const int n = traj.n;
  out << "t";
  for (int i = 1; i <= n; i++) out << ",x" << i;
  for (int i = 1; i <= n; i++) out << ",q" << i;
  for (int i = 1; i <= n; i++) out << ",p" << i;
  out << ",dist_to_eq,payoff_gap,storage\n";
  for (int k = 0; k < traj.samples(); k++) {
    auto ku = static_cast<size_t>(k);
    out << fmt17(traj.times[ku]);
    for (int i = 0; i < n; i++) out << ',' << fmt17(traj.x[ku][static_cast<size_t>(i)]);
    for (int i = 0; i < n; i++) out << ',' << fmt17(traj.q[ku][static_cast<size_t>(i)]);
    for (int i = 0; i < n; i++) out << ',' << fmt17(traj.p[ku][static_cast<size_t>(i)]);
    out << ',' << fmt17(traj.dist_to_eq.empty() ? 0.0 : traj.dist_to_eq[ku]);
    out << ',' << fmt17(traj.payoff_gap.empty() ? 0.0 : traj.payoff_gap[ku]);
    out << ',' << fmt17(traj.storage.empty() ? 0.0 : traj.storage[ku]);
    out << '\n';
  }
}

json certify(const ExperimentConfig& cfg) {
  validate_config(cfg);
  PopulationGame game = build_game(cfg.game);
  Protocol protocol = build_protocol(cfg.protocol, game.n);
  PdmModel pdm = build_pdm(cfg.pdm, game);

  PdmCertificate pc = classify_pdm(pdm);
  double surplus = 0.0;
  if (protocol.family == ProtocolFamily::pbr) surplus = pbr_surplus_bound(protocol.eta);

  std::string theorem = "none";
  std::string conclusion = "inconclusive";
  if (protocol.family == ProtocolFamily::ept || protocol.family == ProtocolFamily::ipc) {
    // Nash-stationary families carry no passivity surplus, so a deficit-free
    // PDM certificate is required
    if (pc.weak && pc.deficit == 0.0) {
      theorem = (protocol.family == ProtocolFamily::ept) ? "Thm1" : "Thm2";
      conclusion = pc.delta_antipassive ? "GAS" : "globally_attractive";
    }
  } else {
    if (pc.weak && pc.deficit == 0.0) {
      theorem = "Thm3-I";
      conclusion = pc.delta_antipassive ? "GAS" : "globally_attractive";
    } else if (pc.weak && surplus > pc.deficit) {
      // deficits are grid-certified, so only the weak form (and hence
      // attractivity) is claimed
      theorem = "Thm3-II";
      conclusion = "globally_attractive";
    }
  }

  json cert;
  cert["lambda_star"] = pc.has_lambda_star ? json(pc.lambda) : json(nullptr);
  cert["deficit"] = pc.deficit;
  cert["surplus_bound"] =
      (protocol.family == ProtocolFamily::pbr) ? json(surplus) : json(nullptr);
  cert["antistorage"] = pc.antistorage;
  cert["theorem_applied"] = theorem;
  cert["conclusion"] = conclusion;
  return cert;
}

namespace {

RunReport run_common(const ExperimentConfig& cfg, const std::string& out_dir, int jobs,
                     bool write_csvs) {
  validate_config(cfg);
  PopulationGame game = build_game(cfg.game);
  Protocol protocol = build_protocol(cfg.protocol, game.n);
  PdmModel pdm = build_pdm(cfg.pdm, game);
  std::vector<SimplexState> ics = build_initial_conditions(cfg.initial_conditions, game.n, game.mass);
  EquilibriumSet eq = reference_equilibria(game, protocol);
  StorageFunction storage = storage_for_protocol(protocol);

  fs::create_directories(out_dir);

  RunReport report;
  report.name = cfg.name;
  report.runs.resize(ics.size());

  parallel_for(static_cast<int>(ics.size()), jobs, [&](int idx) {
    auto iu = static_cast<size_t>(idx);
    const SimplexState& x0 = ics[iu];
    Trajectory traj;
    if (cfg.pdm.q0) {
      traj = integrate(pdm, protocol, x0, PdmState(*cfg.pdm.q0), cfg.integrator.T, cfg.integrator.h);
    } else {
      traj = integrate(pdm, protocol, x0, cfg.integrator.T, cfg.integrator.h);
    }
    ConvergenceReport conv = convergence_report(traj, eq, game);
    traj.dist_to_eq = conv.dist;
    traj.payoff_gap = conv.payoff_gap;
    traj.storage.resize(static_cast<size_t>(traj.samples()));
    for (int k = 0; k < traj.samples(); k++) {
      auto ku = static_cast<size_t>(k);
      traj.storage[ku] =
          storage_eval(storage, SimplexState(traj.x[ku], traj.mass), PayoffVector(traj.p[ku]));
    }

    RunResult& rr = report.runs[iu];
    rr.run_index = idx;
    rr.initial_state = x0.entries;
    rr.terminal_state = traj.x.back();
    rr.terminal_dist = conv.terminal_dist;
    rr.terminal_gap = conv.terminal_gap;
    rr.terminal_storage = traj.storage.back();
    rr.time_to_threshold = conv.time_to_threshold;
    rr.cumulative_projection_correction = traj.cumulative_projection_correction;

    if (cfg.passivity_checks) {
      double eta = (protocol.family == ProtocolFamily::pbr) ? pbr_surplus_bound(protocol.eta) : 0.0;
      rr.passivity_pass = check_delta_passivity(traj, storage, eta).pass;
    }
    if (write_csvs) {
      std::string path = out_dir + "/" + cfg.name + "_" + std::to_string(idx) + ".csv";
      write_trajectory_csv(traj, path);
      rr.csv_path = path;
    }
  });

  json summary;
  summary["name"] = cfg.name;
  summary["certificate"] = certify(cfg);
  report.certificate = summary["certificate"];
  json runs = json::array();
  for (const auto& rr : report.runs) {
    json r;
    r["run_index"] = rr.run_index;
    r["initial_state"] = rr.initial_state;
    r["terminal_state"] = rr.terminal_state;
    r["terminal_dist"] = rr.terminal_dist;
    r["terminal_payoff_gap"] = rr.terminal_gap;
    r["terminal_storage"] = rr.terminal_storage;
    r["time_to_threshold"] = rr.time_to_threshold;
    r["projection_correction"] = rr.cumulative_projection_correction;
    if (cfg.passivity_checks) r["passivity_pass"] = rr.passivity_pass;
    if (!rr.csv_path.empty()) r["csv"] = rr.csv_path;
    runs.push_back(r);
  }
  summary["runs"] = runs;

  report.summary_path = out_dir + "/" + cfg.name + "_summary.json";
  std::ofstream out(report.summary_path);
  out << summary.dump(2) << '\n';
  return report;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int jobs) {
  return run_common(cfg, out_dir, jobs, true);
}

RunReport sweep_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int jobs) {
  RunReport report = run_common(cfg, out_dir, jobs, false);

  // cluster terminal states into distinct limit points
  std::vector<Vec> limits;
  std::vector<int> sizes;
  std::vector<Vec> terminals;
  for (const auto& rr : report.runs) terminals.push_back(rr.terminal_state);
  std::sort(terminals.begin(), terminals.end());
  for (const auto& t : terminals) {
    bool found = false;
    for (size_t c = 0; c < limits.size(); c++) {
      if (sup_norm_diff(limits[c], t) <= 1e-3) {
        sizes[c]++;
        found = true;
        break;
      }
    }
    if (!found) {
      limits.push_back(t);
      sizes.push_back(1);
    }
  }

  // one row per run plus the cluster table
  std::string csv_path = out_dir + "/" + cfg.name + "_terminals.csv";
  std::ofstream csv(csv_path);
  csv << "run_index";
  for (int i = 1; i <= (report.runs.empty() ? 0 : static_cast<int>(report.runs[0].terminal_state.size())); i++)
    csv << ",x" << i;
  csv << ",terminal_dist\n";
  for (const auto& rr : report.runs) {
    csv << rr.run_index;
    for (double v : rr.terminal_state) csv << ',' << fmt17(v);
    csv << ',' << fmt17(rr.terminal_dist) << '\n';
  }

  json summary;
  std::ifstream in(report.summary_path);
  in >> summary;
  in.close();
  json clusters = json::array();
  for (size_t c = 0; c < limits.size(); c++)
    clusters.push_back({{"point", limits[c]}, {"count", sizes[c]}});
  summary["limit_points"] = clusters;
  summary["terminals_csv"] = csv_path;
  std::ofstream out(report.summary_path);
  out << summary.dump(2) << '\n';
  return report;
}

FiniteReport finite_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int jobs) {
  validate_config(cfg);
  if (!cfg.stochastic) throw std::invalid_argument("finite_experiment: config lacks a stochastic block");
  PopulationGame game = build_game(cfg.game);
  if (std::abs(game.mass - 1.0) > 1e-12)
    throw std::invalid_argument("finite_experiment: finite-population runs assume unit mass");
  Protocol protocol = build_protocol(cfg.protocol, game.n);
  PdmModel pdm = build_pdm(cfg.pdm, game);
  std::vector<SimplexState> ics = build_initial_conditions(cfg.initial_conditions, game.n, game.mass);
  const SimplexState& x0 = ics.front();
  EquilibriumSet eq = reference_equilibria(game, protocol);

  const double T = cfg.stochastic->horizon;
  const double h = cfg.integrator.h;

  FiniteReport report;
  report.box = estimate_payoff_box(pdm, protocol, x0, T, h);
  report.rho = choose_rate_bound(protocol, report.box);

  std::vector<int> sizes = cfg.stochastic->population_sizes;
  std::sort(sizes.begin(), sizes.end());
  const int seeds = cfg.stochastic->seed_count;

  // one mean trajectory per N (the initial state is rounded to the count grid)
  std::vector<Trajectory> means(sizes.size());
  std::vector<SimplexState> x0n(sizes.size(), x0);
  for (size_t s = 0; s < sizes.size(); s++) {
    std::vector<int> counts = round_to_count_grid(x0, sizes[s]);
    Vec e(static_cast<size_t>(game.n));
    for (int i = 0; i < game.n; i++)
      e[static_cast<size_t>(i)] = static_cast<double>(counts[static_cast<size_t>(i)]) / sizes[s];
    x0n[s] = SimplexState(e, game.mass);
    means[s] = integrate(pdm, protocol, x0n[s], T, h);
  }

  const int total = static_cast<int>(sizes.size()) * seeds;
  report.rows.resize(static_cast<size_t>(total));
  JumpSimOptions opts;
  opts.output_step = h;
  opts.record_events = false;
  parallel_for(total, jobs, [&](int idx) {
    int si = idx / seeds;
    int seed = idx % seeds;
    PdmState q0(pdm.game.payoff_fn(x0n[static_cast<size_t>(si)].entries));
    JumpTrajectory jt = simulate_finite_population(sizes[static_cast<size_t>(si)], protocol, pdm,
                                                   x0n[static_cast<size_t>(si)], q0, T, report.rho,
                                                   static_cast<uint64_t>(seed), opts);
    FiniteRow& row = report.rows[static_cast<size_t>(idx)];
    row.N = sizes[static_cast<size_t>(si)];
    row.seed = static_cast<uint64_t>(seed);
    row.sup_dev = sup_deviation(jt, means[static_cast<size_t>(si)]);
    Vec terminal = jt.state_at_grid(static_cast<int>(jt.grid_times.size()) - 1);
    row.terminal_dist = distance_to_set(SimplexState(terminal, 1.0), eq);
  });
  std::sort(report.rows.begin(), report.rows.end(), [](const FiniteRow& a, const FiniteRow& b) {
    if (a.N != b.N) return a.N < b.N;
    return a.seed < b.seed;
  });

  fs::create_directories(out_dir);
  report.csv_path = out_dir + "/" + cfg.name + "_finite.csv";
  std::ofstream csv(report.csv_path);
  csv << "N,seed,sup_deviation,terminal_distance_to_eq\n";
  for (const auto& row : report.rows)
    csv << row.N << ',' << row.seed << ',' << fmt17(row.sup_dev) << ',' << fmt17(row.terminal_dist)
        << '\n';
  return report;
}

json equilibria_report(const ExperimentConfig& cfg) {
  validate_config(cfg);
  PopulationGame game = build_game(cfg.game);
  Protocol protocol = build_protocol(cfg.protocol, game.n);
  EquilibriumSet eq = reference_equilibria(game, protocol);
  json j;
  j["kind"] = (eq.kind == EquilibriumKind::nash) ? "nash" : "perturbed";
  j["tolerance"] = eq.tolerance;
  json pts = json::array();
  for (const auto& p : eq.points) pts.push_back(p.entries);
  j["points"] = pts;
  if (eq.search_failed) j["search_failed"] = true;
  return j;
}

}  // namespace popdyn
