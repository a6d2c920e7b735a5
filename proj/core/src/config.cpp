#include "popdyn/config.hpp"

#include <fstream>
#include <random>

namespace popdyn {

using nlohmann::json;

namespace {

Vec to_vec(const json& j) { return j.get<Vec>(); }

Mat to_mat(const json& j) {
  Mat m;
  for (const auto& row : j) m.push_back(row.get<Vec>());
  return m;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.name = j.value("name", std::string("experiment"));
  cfg.output_dir = j.value("output_dir", std::string("out"));
  cfg.passivity_checks = j.value("passivity_checks", false);

  const auto& g = j.at("game");
  cfg.game.kind = g.at("kind").get<std::string>();
  cfg.game.mass = g.value("mass", 1.0);
  if (g.contains("matrix")) cfg.game.matrix = to_mat(g.at("matrix"));
  if (g.contains("offset")) cfg.game.offset = to_vec(g.at("offset"));

  const auto& p = j.at("protocol");
  cfg.protocol.kind = p.at("kind").get<std::string>();
  cfg.protocol.eta = p.value("eta", 0.0);

  if (j.contains("pdm")) {
    const auto& d = j.at("pdm");
    cfg.pdm.kind = d.value("kind", std::string("memoryless"));
    cfg.pdm.alpha = d.value("alpha", 1.0);
    cfg.pdm.mu0 = d.value("mu0", 1.0);
    cfg.pdm.mu1 = d.value("mu1", 0.0);
    cfg.pdm.mu2 = d.value("mu2", 0.0);
    if (d.contains("q0")) cfg.pdm.q0 = to_vec(d.at("q0"));
  }

  if (j.contains("integrator")) {
    cfg.integrator.T = j.at("integrator").value("T", 100.0);
    cfg.integrator.h = j.at("integrator").value("h", 0.01);
  }

  if (j.contains("initial_conditions")) {
    const auto& ic = j.at("initial_conditions");
    cfg.initial_conditions.kind = ic.value("kind", std::string("barycentric_grid"));
    if (ic.contains("points"))
      for (const auto& pt : ic.at("points")) cfg.initial_conditions.points.push_back(to_vec(pt));
    cfg.initial_conditions.resolution = ic.value("resolution", 3);
    cfg.initial_conditions.include_center = ic.value("include_center", true);
    cfg.initial_conditions.interior_only = ic.value("interior_only", false);
    cfg.initial_conditions.count = ic.value("count", 0);
    cfg.initial_conditions.seed = ic.value("seed", static_cast<uint64_t>(0));
  }

  if (j.contains("stochastic")) {
    StochasticConfig sc;
    const auto& s = j.at("stochastic");
    sc.population_sizes = s.at("N").get<std::vector<int>>();
    sc.seed_count = s.value("seeds", 1);
    sc.horizon = s.value("horizon", 50.0);
    cfg.stochastic = sc;
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("load_config: cannot open " + path);
  json j = json::parse(in);
  return parse_config(j);
}

json serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["output_dir"] = cfg.output_dir;
  j["passivity_checks"] = cfg.passivity_checks;

  json g;
  g["kind"] = cfg.game.kind;
  g["mass"] = cfg.game.mass;
  if (!cfg.game.matrix.empty()) {
    g["matrix"] = cfg.game.matrix;
    g["offset"] = cfg.game.offset;
  }
  j["game"] = g;

  json p;
  p["kind"] = cfg.protocol.kind;
  if (cfg.protocol.kind == "logit") p["eta"] = cfg.protocol.eta;
  j["protocol"] = p;

  json d;
  d["kind"] = cfg.pdm.kind;
  d["alpha"] = cfg.pdm.alpha;
  d["mu0"] = cfg.pdm.mu0;
  d["mu1"] = cfg.pdm.mu1;
  d["mu2"] = cfg.pdm.mu2;
  if (cfg.pdm.q0) d["q0"] = *cfg.pdm.q0;
  j["pdm"] = d;

  j["integrator"] = {{"T", cfg.integrator.T}, {"h", cfg.integrator.h}};

  json ic;
  ic["kind"] = cfg.initial_conditions.kind;
  if (!cfg.initial_conditions.points.empty()) ic["points"] = cfg.initial_conditions.points;
  ic["resolution"] = cfg.initial_conditions.resolution;
  ic["include_center"] = cfg.initial_conditions.include_center;
  ic["interior_only"] = cfg.initial_conditions.interior_only;
  ic["count"] = cfg.initial_conditions.count;
  ic["seed"] = cfg.initial_conditions.seed;
  j["initial_conditions"] = ic;

  if (cfg.stochastic) {
    j["stochastic"] = {{"N", cfg.stochastic->population_sizes},
                       {"seeds", cfg.stochastic->seed_count},
                       {"horizon", cfg.stochastic->horizon}};
  }
  return j;
}

void validate_config(const ExperimentConfig& cfg) {
  const std::string& gk = cfg.game.kind;
  if (gk != "affine" && gk != "congestion_example" && gk != "demand_response_example" &&
      gk != "task_allocation_example")
    throw std::invalid_argument("config: unknown game kind '" + gk + "'");
  if (gk == "affine") {
    if (cfg.game.matrix.empty()) throw std::invalid_argument("config: affine game requires a matrix");
    if (cfg.game.offset.size() != cfg.game.matrix.size())
      throw std::invalid_argument("config: affine offset dimension mismatch");
  }
  if (!(cfg.game.mass > 0.0)) throw std::invalid_argument("config: mass must be positive");

  const std::string& pk = cfg.protocol.kind;
  if (pk != "bnn" && pk != "smith" && pk != "logit")
    throw std::invalid_argument("config: unknown protocol kind '" + pk + "'");
  if (pk == "logit" && !(cfg.protocol.eta > 0.0))
    throw std::invalid_argument("config: logit protocol requires eta > 0");

  const std::string& dk = cfg.pdm.kind;
  if (dk != "memoryless" && dk != "anticipatory" && dk != "smoothing" && dk != "general")
    throw std::invalid_argument("config: unknown pdm kind '" + dk + "'");
  if (dk != "memoryless") {
    if (!(cfg.pdm.alpha > 0.0)) throw std::invalid_argument("config: pdm alpha must be positive");
    if (dk == "anticipatory" && cfg.pdm.mu2 < 0.0)
      throw std::invalid_argument("config: anticipatory mu2 must be nonnegative");
    if (dk == "general" && std::abs(cfg.pdm.mu0 + cfg.pdm.mu1 - 1.0) > 1e-12)
      throw std::invalid_argument("config: general pdm requires mu0 + mu1 = 1");
  }

  if (!(cfg.integrator.T > 0.0)) throw std::invalid_argument("config: T must be positive");
  if (!(cfg.integrator.h > 0.0) || cfg.integrator.h > cfg.integrator.T)
    throw std::invalid_argument("config: need 0 < h <= T");

  const auto& ic = cfg.initial_conditions;
  if (ic.kind == "explicit") {
    if (ic.points.empty())
      throw std::invalid_argument("config: explicit initial-condition list is empty");
  } else if (ic.kind == "barycentric_grid") {
    if (ic.resolution < 1) throw std::invalid_argument("config: grid resolution must be >= 1");
  } else if (ic.kind == "random") {
    if (ic.count < 1) throw std::invalid_argument("config: random initial conditions need count >= 1");
  } else {
    throw std::invalid_argument("config: unknown initial-condition kind '" + ic.kind + "'");
  }

  if (cfg.stochastic) {
    if (cfg.stochastic->population_sizes.empty())
      throw std::invalid_argument("config: stochastic block needs a nonempty N list");
    for (int N : cfg.stochastic->population_sizes)
      if (N < 1) throw std::invalid_argument("config: population sizes must be >= 1");
    if (cfg.stochastic->seed_count < 1)
      throw std::invalid_argument("config: stochastic block needs seeds >= 1");
    if (!(cfg.stochastic->horizon > 0.0))
      throw std::invalid_argument("config: stochastic horizon must be positive");
  }
}

PopulationGame build_game(const GameConfig& cfg) {
  if (cfg.kind == "congestion_example") return congestion_example();
  if (cfg.kind == "demand_response_example") return demand_response_example();
  if (cfg.kind == "task_allocation_example") return task_allocation_example();
  if (cfg.kind == "affine") return affine_game(cfg.matrix, cfg.offset, cfg.mass);
  throw std::invalid_argument("build_game: unknown kind '" + cfg.kind + "'");
}

Protocol build_protocol(const ProtocolConfig& cfg, int n) {
  if (cfg.kind == "bnn") return bnn_protocol(n);
  if (cfg.kind == "smith") return smith_protocol(n);
  if (cfg.kind == "logit") return logit_protocol(n, cfg.eta);
  throw std::invalid_argument("build_protocol: unknown kind '" + cfg.kind + "'");
}

PdmModel build_pdm(const PdmConfig& cfg, const PopulationGame& game) {
  if (cfg.kind == "memoryless") return memoryless_pdm(game);
  if (cfg.kind == "anticipatory") return anticipatory_pdm(game, cfg.alpha, cfg.mu2);
  if (cfg.kind == "smoothing") return smoothing_pdm(game, cfg.alpha);
  if (cfg.kind == "general") return general_pdm(game, cfg.alpha, cfg.mu0, cfg.mu1, cfg.mu2);
  throw std::invalid_argument("build_pdm: unknown kind '" + cfg.kind + "'");
}

std::vector<SimplexState> build_initial_conditions(const InitialConditionConfig& cfg, int n,
                                                   double mass) {
  std::vector<SimplexState> out;
  if (cfg.kind == "explicit") {
    for (const auto& pt : cfg.points) {
      if (static_cast<int>(pt.size()) != n)
        throw std::invalid_argument("initial_conditions: point dimension mismatch");
      out.emplace_back(pt, mass);
    }
  } else if (cfg.kind == "barycentric_grid") {
    if (n != 3) throw std::invalid_argument("initial_conditions: barycentric grid supports n = 3");
    GridOptions opts;
    opts.include_center = cfg.include_center;
    opts.interior_only = cfg.interior_only;
    out = barycentric_grid(cfg.resolution, mass, opts);
  } else if (cfg.kind == "random") {
    std::mt19937_64 rng(cfg.seed);
    std::exponential_distribution<double> expo(1.0);
    for (int k = 0; k < cfg.count; k++) {
      Vec e(static_cast<size_t>(n));
      double sum = 0.0;
      for (auto& x : e) {
        x = expo(rng);
        sum += x;
      }
      for (auto& x : e) x *= mass / sum;
      out.emplace_back(std::move(e), mass);
    }
  } else {
    throw std::invalid_argument("initial_conditions: unknown kind '" + cfg.kind + "'");
  }
  if (out.empty()) throw std::invalid_argument("initial_conditions: empty set");
  return out;
}

}  // namespace popdyn
