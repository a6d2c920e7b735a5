#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "popdyn/config.hpp"
#include "popdyn/closedloop.hpp"
#include "popdyn/equilibria.hpp"
#include "popdyn/passivity.hpp"
#include "popdyn/stochastic.hpp"

namespace popdyn {

// Matched delta-storage function for a protocol family.
StorageFunction storage_for_protocol(const Protocol& protocol);

// Equilibrium set the runs are measured against: Nash set for EPT and IPC
// protocols, logit perturbed equilibria for PBR.
EquilibriumSet reference_equilibria(const PopulationGame& game, const Protocol& protocol);

struct RunResult {
  int run_index = 0;
  Vec initial_state;
  Vec terminal_state;
  double terminal_dist = 0.0;
  double terminal_gap = 0.0;
  double terminal_storage = 0.0;
  double time_to_threshold = 0.0;
  double cumulative_projection_correction = 0.0;
  bool passivity_pass = true;
  std::string csv_path;
};

struct RunReport {
  std::string name;
  std::vector<RunResult> runs;
  nlohmann::json certificate;
  std::string summary_path;
};

// Certificate per the stability theorems' hypothesis tables.
nlohmann::json certify(const ExperimentConfig& cfg);

RunReport run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int jobs = 1);
RunReport sweep_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int jobs = 1);

struct FiniteRow {
  int N = 0;
  uint64_t seed = 0;
  double sup_dev = 0.0;
  double terminal_dist = 0.0;
};

struct FiniteReport {
  std::vector<FiniteRow> rows;  // sorted by (N, seed)
  double rho = 0.0;
  PayoffBox box;
  std::string csv_path;
};

FiniteReport finite_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                               int jobs = 1);

nlohmann::json equilibria_report(const ExperimentConfig& cfg);

// Trajectory CSV: t, x1..xn, q1..qn, p1..pn, dist_to_eq, payoff_gap, storage
// with 17 significant digits so byte-level determinism checks are meaningful.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace popdyn
