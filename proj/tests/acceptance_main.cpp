// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Heavier end-to-end runs than the unit suites; expected
// wall time is a couple of minutes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "popdyn/runner.hpp"

using namespace popdyn;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) failures++;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::vector<SimplexState> nine_grid() {
  GridOptions opts;
  opts.include_center = false;
  return barycentric_grid(3, 1.0, opts);
}

std::vector<SimplexState> random_starts(int count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  std::vector<SimplexState> out;
  for (int k = 0; k < count; k++) {
    Vec e(3);
    double sum = 0.0;
    for (auto& x : e) {
      x = expo(rng);
      sum += x;
    }
    for (auto& x : e) x /= sum;
    out.emplace_back(e, 1.0);
  }
  return out;
}

// ---- criterion 1: congestion convergence under BNN, memoryless PDM ----
void criterion_1() {
  auto t0 = clock_type::now();
  Vec ne = {4.0 / 11.0, 6.0 / 11.0, 1.0 / 11.0};
  PdmModel pdm = memoryless_pdm(congestion_example());
  Protocol bnn = bnn_protocol(3);
  double worst = 0.0;
  for (const auto& x0 : nine_grid()) {
    Trajectory traj = integrate(pdm, bnn, x0, 100.0, 0.01);
    worst = std::max(worst, sup_norm_diff(traj.x.back(), ne));
  }
  double elapsed = seconds_since(t0);
  char detail[160];
  std::snprintf(detail, sizeof(detail), "max terminal distance %.3g, %.2f s", worst, elapsed);
  report(1, "congestion convergence", worst < 1e-3 && elapsed < 10.0, detail);
}

// ---- criterion 2: anticipatory PDM converges faster than memoryless ----
void criterion_2() {
  PopulationGame g = congestion_example();
  EquilibriumSet eq = nash_set(g);
  Protocol bnn = bnn_protocol(3);
  PdmModel mem = memoryless_pdm(g);
  PdmModel ant = anticipatory_pdm(g, 1.0, 5.0);
  int faster = 0, total = 0;
  for (const auto& x0 : nine_grid()) {
    Trajectory tm = integrate(mem, bnn, x0, 100.0, 0.01);
    Trajectory ta = integrate(ant, bnn, x0, 100.0, 0.01);
    double time_m = convergence_report(tm, eq, g).time_to_threshold;
    double time_a = convergence_report(ta, eq, g).time_to_threshold;
    total++;
    if (time_a < time_m) faster++;
  }
  char detail[120];
  std::snprintf(detail, sizeof(detail), "anticipatory faster on %d of %d starts", faster, total);
  report(2, "anticipation speedup", faster >= 8, detail);
}

// ---- criterion 3: demand response convergence under Smith ----
void criterion_3() {
  PopulationGame g = demand_response_example();
  EquilibriumSet eq = nash_set(g);
  Protocol smith = smith_protocol(3);
  double worst_dist = 0.0, worst_gap = 0.0;
  for (int kind = 0; kind < 2; kind++) {
    PdmModel pdm = (kind == 0) ? memoryless_pdm(g) : smoothing_pdm(g, 1.0);
    for (const auto& x0 : nine_grid()) {
      Trajectory traj = integrate(pdm, smith, x0, 100.0, 0.01);
      ConvergenceReport rep = convergence_report(traj, eq, g);
      worst_dist = std::max(worst_dist, rep.terminal_dist);
      worst_gap = std::max(worst_gap, rep.terminal_gap);
    }
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail), "max terminal distance %.3g, max payoff gap %.3g",
                worst_dist, worst_gap);
  report(3, "demand response convergence", worst_dist < 1e-3 && worst_gap < 1e-4, detail);
}

// ---- criterion 4: task allocation bifurcation in the logit noise level ----
void criterion_4() {
  PopulationGame g = task_allocation_example();
  std::vector<SimplexState> starts = random_starts(50, 2718);

  // reference set: the barycenter and the three half-half edge points
  std::vector<Vec> refs = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                           {0.5, 0.5, 0.0},
                           {0.5, 0.0, 0.5},
                           {0.0, 0.5, 0.5}};

  PdmModel pdm = memoryless_pdm(g);
  Protocol small_eta = logit_protocol(3, 0.01);
  std::vector<bool> hit(refs.size(), false);
  bool matched_all = true;
  double worst_match = 0.0;
  for (const auto& x0 : starts) {
    Trajectory traj = integrate(pdm, small_eta, x0, 100.0, 0.01);
    double best = 1e300;
    size_t best_ref = 0;
    for (size_t rix = 0; rix < refs.size(); rix++) {
      double d = sup_norm_diff(traj.x.back(), refs[rix]);
      if (d < best) {
        best = d;
        best_ref = rix;
      }
    }
    worst_match = std::max(worst_match, best);
    if (best < 1e-2)
      hit[best_ref] = true;
    else
      matched_all = false;
  }
  int distinct = static_cast<int>(std::count(hit.begin(), hit.end(), true));

  Protocol large_eta = logit_protocol(3, 25.0);
  EquilibriumSet pe = perturbed_equilibrium(g, 25.0);
  bool unique_limit = pe.points.size() == 1;
  double worst_pe = 0.0;
  for (const auto& x0 : starts) {
    Trajectory traj = integrate(pdm, large_eta, x0, 100.0, 0.01);
    worst_pe = std::max(worst_pe, sup_norm_diff(traj.x.back(), pe.points[0].entries));
  }
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "eta=0.01: %d distinct limits, worst match %.3g; eta=25: worst distance %.3g",
                distinct, worst_match, worst_pe);
  report(4, "task allocation bifurcation",
         distinct >= 2 && matched_all && unique_limit && worst_pe < 1e-3, detail);
}

// ---- criterion 5: certificates ----
void criterion_5() {
  double lam = lambda_star(congestion_example().matrix);
  double nu = memoryless_deficit(task_allocation_example());
  double surplus = pbr_surplus_bound(25.0);

  ExperimentConfig c1;
  c1.game.kind = "congestion_example";
  c1.protocol.kind = "bnn";
  c1.pdm.kind = "memoryless";
  c1.initial_conditions.kind = "explicit";
  c1.initial_conditions.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
  ExperimentConfig c2 = c1;
  c2.game.kind = "demand_response_example";
  c2.protocol.kind = "smith";
  c2.pdm.kind = "smoothing";
  c2.pdm.alpha = 1.0;
  ExperimentConfig c3 = c1;
  c3.game.kind = "task_allocation_example";
  c3.protocol.kind = "logit";
  c3.protocol.eta = 25.0;

  std::string t1 = certify(c1)["theorem_applied"];
  std::string t2 = certify(c2)["theorem_applied"];
  std::string t3 = certify(c3)["theorem_applied"];

  bool pass = std::abs(lam) <= 1e-10 && nu > 24.5 && nu < 25.0 && surplus >= 25.0 &&
              t1 == "Thm1" && t2 == "Thm2" && t3 == "Thm3-II";
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "lambda* %.2e, deficit %.4f, surplus %.4f, theorems %s/%s/%s", lam, nu, surplus,
                t1.c_str(), t2.c_str(), t3.c_str());
  report(5, "certificates", pass, detail);
}

// ---- criteria 6 and 8: passivity inequalities and storage decay ----
struct NamedRun {
  std::string name;
  Trajectory traj;
  StorageFunction storage;
  double surplus;
  bool theorem12;  // a Theorem 1/2 configuration
};

std::vector<NamedRun> section_x_runs() {
  SimplexState x0({0.8, 0.1, 0.1}, 1.0);
  std::vector<NamedRun> runs;
  runs.push_back({"bnn+memoryless congestion",
                  integrate(memoryless_pdm(congestion_example()), bnn_protocol(3), x0, 100.0, 0.01),
                  bnn_storage(3), 0.0, true});
  runs.push_back({"bnn+anticipatory congestion",
                  integrate(anticipatory_pdm(congestion_example(), 1.0, 5.0), bnn_protocol(3), x0,
                            100.0, 0.01),
                  bnn_storage(3), 0.0, true});
  runs.push_back({"smith+memoryless demand response",
                  integrate(memoryless_pdm(demand_response_example()), smith_protocol(3), x0,
                            100.0, 0.01),
                  smith_storage(3), 0.0, true});
  runs.push_back({"smith+smoothing demand response",
                  integrate(smoothing_pdm(demand_response_example(), 1.0), smith_protocol(3), x0,
                            100.0, 0.01),
                  smith_storage(3), 0.0, true});
  runs.push_back({"logit(0.01)+task allocation",
                  integrate(memoryless_pdm(task_allocation_example()), logit_protocol(3, 0.01), x0,
                            100.0, 0.01),
                  logit_storage(3, 0.01), pbr_surplus_bound(0.01), false});
  runs.push_back({"logit(25)+task allocation",
                  integrate(memoryless_pdm(task_allocation_example()), logit_protocol(3, 25.0), x0,
                            100.0, 0.01),
                  logit_storage(3, 25.0), pbr_surplus_bound(25.0), false});
  return runs;
}

void criterion_6(const std::vector<NamedRun>& runs) {
  bool pass = true;
  std::string worst_name;
  double worst_violation = -1.0;
  for (const auto& run : runs) {
    PassivityReport rep = check_delta_passivity(run.traj, run.storage, run.surplus);
    if (!rep.pass) pass = false;
    if (rep.max_violation > worst_violation) {
      worst_violation = rep.max_violation;
      worst_name = run.name;
    }
  }

  AntistorageFunction zero = zero_antistorage(3);
  AntistorageFunction aq_cong =
      certified_affine_antistorage(anticipatory_pdm(congestion_example(), 1.0, 5.0));
  AntistorageFunction aq_dr =
      certified_affine_antistorage(smoothing_pdm(demand_response_example(), 1.0));
  PassivityReport a1 = check_delta_antipassivity(runs[0].traj, zero, 0.0);
  PassivityReport a2 = check_delta_antipassivity(runs[2].traj, zero, 0.0);
  PassivityReport a3 = check_delta_antipassivity(runs[1].traj, aq_cong, 0.0);
  PassivityReport a4 = check_delta_antipassivity(runs[3].traj, aq_dr, 0.0);
  bool anti = a1.pass && a2.pass && a3.pass && a4.pass;

  char detail[200];
  std::snprintf(detail, sizeof(detail), "worst storage-side violation %.3g (%s); antistorage %s",
                worst_violation, worst_name.c_str(), anti ? "pass" : "fail");
  report(6, "passivity inequality suites", pass && anti, detail);
}

// ---- criterion 7: gradient identity ----
void criterion_7() {
  PassivityReport b = check_storage_gradient(bnn_storage(3), bnn_protocol(3), 200);
  PassivityReport s = check_storage_gradient(smith_storage(3), smith_protocol(3), 200);
  PassivityReport l = check_storage_gradient(logit_storage(3, 0.8), logit_protocol(3, 0.8), 200);
  char detail[160];
  std::snprintf(detail, sizeof(detail), "max deviations %.2e / %.2e / %.2e", b.max_violation,
                s.max_violation, l.max_violation);
  report(7, "storage gradient identity", b.pass && s.pass && l.pass, detail);
}

void criterion_8(const std::vector<NamedRun>& runs) {
  bool pass = true;
  double worst_terminal = 0.0, worst_step = 0.0;
  for (const auto& run : runs) {
    if (!run.theorem12) continue;
    double prev = 0.0;
    for (int k = 0; k < run.traj.samples(); k++) {
      auto ku = static_cast<size_t>(k);
      double s = storage_eval(run.storage, SimplexState(run.traj.x[ku], 1.0),
                              PayoffVector(run.traj.p[ku]));
      if (k > 0) {
        double rise = s - prev;
        worst_step = std::max(worst_step, rise - 1e-6 * (1.0 + prev));
        if (rise > 1e-6 * (1.0 + prev)) pass = false;
      }
      prev = s;
    }
    worst_terminal = std::max(worst_terminal, prev);
    if (prev >= 1e-6) pass = false;
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail), "worst terminal storage %.3g, worst step excess %.3g",
                worst_terminal, worst_step);
  report(8, "storage decay", pass, detail);
}

// ---- criterion 9: mean-field validation on the demand response game ----
void criterion_9() {
  auto t0 = clock_type::now();
  ExperimentConfig cfg;
  cfg.name = "finite_dr";
  cfg.game.kind = "demand_response_example";
  cfg.protocol.kind = "smith";
  cfg.pdm.kind = "memoryless";
  cfg.integrator.T = 50.0;
  cfg.integrator.h = 0.01;
  cfg.initial_conditions.kind = "explicit";
  cfg.initial_conditions.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
  StochasticConfig sc;
  sc.population_sizes = {100, 1000, 10000};
  sc.seed_count = 20;
  sc.horizon = 50.0;
  cfg.stochastic = sc;

  fs::path dir = fs::temp_directory_path() / "popdyn_acceptance_finite";
  fs::remove_all(dir);
  FiniteReport rep = finite_experiment(cfg, dir.string(), 4);

  std::vector<double> medians;
  for (int N : sc.population_sizes) {
    std::vector<double> devs;
    for (const auto& row : rep.rows)
      if (row.N == N) devs.push_back(row.sup_dev);
    std::sort(devs.begin(), devs.end());
    medians.push_back(0.5 * (devs[devs.size() / 2 - 1] + devs[devs.size() / 2]));
  }
  double elapsed = seconds_since(t0);
  bool decreasing = medians[0] > medians[1] && medians[1] > medians[2];
  bool pass = decreasing && medians[2] < 0.05 && elapsed < 120.0;
  char detail[200];
  std::snprintf(detail, sizeof(detail), "medians %.4f / %.4f / %.4f, rho %.2f, %.1f s", medians[0],
                medians[1], medians[2], rep.rho, elapsed);
  report(9, "mean-field validation", pass, detail);
  fs::remove_all(dir);
}

// ---- criterion 10: determinism and numerics ----
void criterion_10() {
  // step-halving agreement across the section-X configurations
  SimplexState x0({0.8, 0.1, 0.1}, 1.0);
  struct Pair {
    PdmModel pdm;
    Protocol protocol;
  };
  std::vector<Pair> cases;
  cases.push_back({memoryless_pdm(congestion_example()), bnn_protocol(3)});
  cases.push_back({anticipatory_pdm(congestion_example(), 1.0, 5.0), bnn_protocol(3)});
  cases.push_back({memoryless_pdm(demand_response_example()), smith_protocol(3)});
  cases.push_back({smoothing_pdm(demand_response_example(), 1.0), smith_protocol(3)});
  cases.push_back({memoryless_pdm(task_allocation_example()), logit_protocol(3, 0.01)});
  cases.push_back({memoryless_pdm(task_allocation_example()), logit_protocol(3, 25.0)});
  double worst_halving = 0.0, worst_projection = 0.0;
  for (const auto& c : cases) {
    Trajectory coarse = integrate(c.pdm, c.protocol, x0, 100.0, 0.01);
    Trajectory fine = integrate(c.pdm, c.protocol, x0, 100.0, 0.005);
    worst_halving = std::max(worst_halving, sup_norm_diff(coarse.x.back(), fine.x.back()));
    worst_projection = std::max(worst_projection, coarse.cumulative_projection_correction);
  }

  // identical configs (and seeds) give byte-identical csv bodies
  ExperimentConfig cfg;
  cfg.name = "det";
  cfg.game.kind = "congestion_example";
  cfg.protocol.kind = "bnn";
  cfg.pdm.kind = "memoryless";
  cfg.integrator.T = 10.0;
  cfg.integrator.h = 0.01;
  cfg.initial_conditions.kind = "barycentric_grid";
  cfg.initial_conditions.resolution = 3;
  cfg.initial_conditions.include_center = false;
  fs::path dir_a = fs::temp_directory_path() / "popdyn_acc_det_a";
  fs::path dir_b = fs::temp_directory_path() / "popdyn_acc_det_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  RunReport a = run_experiment(cfg, dir_a.string(), 2);
  RunReport b = run_experiment(cfg, dir_b.string(), 2);
  bool identical = a.runs.size() == b.runs.size();
  for (size_t k = 0; identical && k < a.runs.size(); k++) {
    identical = read_file(a.runs[k].csv_path) == read_file(b.runs[k].csv_path);
    worst_projection = std::max(worst_projection, a.runs[k].cumulative_projection_correction);
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  bool pass = worst_halving <= 1e-6 && identical && worst_projection < 1e-5;
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "step-halving gap %.3g, projection correction %.3g, csv bodies %s", worst_halving,
                worst_projection, identical ? "identical" : "differ");
  report(10, "determinism and numerics", pass, detail);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  std::vector<NamedRun> runs = section_x_runs();
  criterion_6(runs);
  criterion_7();
  criterion_8(runs);
  criterion_9();
  criterion_10();
  if (failures == 0)
    std::printf("all acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
