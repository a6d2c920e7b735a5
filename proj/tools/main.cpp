#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "popdyn/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

enum class Command { run, sweep, finite, certify, equilibria };

int dispatch(Command cmd, const std::string& config_path, const std::string& out_override,
             int jobs) {
  popdyn::ExperimentConfig cfg = popdyn::load_config(config_path);
  std::string out_dir = out_override.empty() ? cfg.output_dir : out_override;
  switch (cmd) {
    case Command::run: {
      popdyn::RunReport rep = popdyn::run_experiment(cfg, out_dir, jobs);
      std::cout << "wrote " << rep.runs.size() << " trajectories, summary at " << rep.summary_path
                << "\n";
      break;
    }
    case Command::sweep: {
      popdyn::RunReport rep = popdyn::sweep_experiment(cfg, out_dir, jobs);
      std::cout << "swept " << rep.runs.size() << " runs, summary at " << rep.summary_path << "\n";
      break;
    }
    case Command::finite: {
      popdyn::FiniteReport rep = popdyn::finite_experiment(cfg, out_dir, jobs);
      std::cout << "rho " << rep.rho << ", " << rep.rows.size() << " rows at " << rep.csv_path
                << "\n";
      break;
    }
    case Command::certify:
      std::cout << popdyn::certify(cfg).dump(2) << "\n";
      break;
    case Command::equilibria:
      std::cout << popdyn::equilibria_report(cfg).dump(2) << "\n";
      break;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"population game laboratory: mean closed-loop simulation, equilibria,"
               " passivity certificates, finite-population validation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  app.add_option("--config", config_path, "experiment config file (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);

  app.add_subcommand("run", "integrate the closed loop for each initial condition");
  auto* sweep = app.add_subcommand("sweep", "integrate and cluster terminal states");
  auto* finite = app.add_subcommand("finite", "finite-population jump-process validation");
  auto* certify = app.add_subcommand("certify", "emit a stability certificate (JSON)");
  auto* equilibria = app.add_subcommand("equilibria", "print the equilibrium set (JSON)");

  // flags that override the config's stochastic block
  std::vector<int> n_list;
  int seed_count = 0;
  double horizon = 0.0;
  finite->add_option("--N", n_list, "population sizes")->delimiter(',');
  finite->add_option("--seeds", seed_count, "seeds per population size");
  finite->add_option("--horizon", horizon, "simulation horizon");

  CLI11_PARSE(app, argc, argv);

  Command cmd = Command::run;
  if (sweep->parsed()) cmd = Command::sweep;
  if (finite->parsed()) cmd = Command::finite;
  if (certify->parsed()) cmd = Command::certify;
  if (equilibria->parsed()) cmd = Command::equilibria;

  try {
    if (cmd == Command::finite && (!n_list.empty() || seed_count > 0 || horizon > 0.0)) {
      popdyn::ExperimentConfig cfg = popdyn::load_config(config_path);
      if (!cfg.stochastic) cfg.stochastic = popdyn::StochasticConfig{};
      if (!n_list.empty()) cfg.stochastic->population_sizes = n_list;
      if (seed_count > 0) cfg.stochastic->seed_count = seed_count;
      if (horizon > 0.0) cfg.stochastic->horizon = horizon;
      std::string out = out_dir.empty() ? cfg.output_dir : out_dir;
      popdyn::FiniteReport rep = popdyn::finite_experiment(cfg, out, jobs);
      std::cout << "rho " << rep.rho << ", " << rep.rows.size() << " rows at " << rep.csv_path
                << "\n";
      return kExitOk;
    }
    return dispatch(cmd, config_path, out_dir, jobs);
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const popdyn::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
