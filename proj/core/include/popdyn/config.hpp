#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "popdyn/edm.hpp"
#include "popdyn/games.hpp"
#include "popdyn/pdm.hpp"
#include "popdyn/types.hpp"

namespace popdyn {

struct GameConfig {
  std::string kind;  // affine | congestion_example | demand_response_example | task_allocation_example
  Mat matrix;        // affine only, row-major
  Vec offset;        // affine only
  double mass = 1.0;
};

struct ProtocolConfig {
  std::string kind;  // bnn | smith | logit
  double eta = 0.0;  // logit only
};

struct PdmConfig {
  std::string kind = "memoryless";  // memoryless | anticipatory | smoothing | general
  double alpha = 1.0;
  double mu0 = 1.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  std::optional<Vec> q0;
};

struct IntegratorConfig {
  double T = 100.0;
  double h = 0.01;
};

struct InitialConditionConfig {
  std::string kind = "barycentric_grid";  // explicit | barycentric_grid | random
  std::vector<Vec> points;                // explicit
  int resolution = 3;                     // barycentric_grid
  bool include_center = true;
  bool interior_only = false;
  int count = 0;        // random
  uint64_t seed = 0;    // random
};

struct StochasticConfig {
  std::vector<int> population_sizes;
  int seed_count = 0;
  double horizon = 50.0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  GameConfig game;
  ProtocolConfig protocol;
  PdmConfig pdm;
  IntegratorConfig integrator;
  InitialConditionConfig initial_conditions;
  std::optional<StochasticConfig> stochastic;
  std::string output_dir = "out";
  bool passivity_checks = false;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json serialize_config(const ExperimentConfig& cfg);

// Throws std::invalid_argument with a message on the first violated
// precondition; every run entry point validates before touching files.
void validate_config(const ExperimentConfig& cfg);

PopulationGame build_game(const GameConfig& cfg);
Protocol build_protocol(const ProtocolConfig& cfg, int n);
PdmModel build_pdm(const PdmConfig& cfg, const PopulationGame& game);
std::vector<SimplexState> build_initial_conditions(const InitialConditionConfig& cfg, int n,
                                                   double mass);

}  // namespace popdyn
