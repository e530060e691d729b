#include "pilqr/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pilqr/rng.hpp"

namespace pilqr {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& path) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (allowed.count(it.key()) == 0) {
      throw ScenarioError("unknown field '" + path + it.key() + "'");
    }
  }
}

VectorXd to_vector(const json& arr, const std::string& path) {
  if (!arr.is_array()) {
    throw ScenarioError("expected array at '" + path + "'");
  }
  VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw ScenarioError("expected number at '" + path + "'");
    }
    v[static_cast<int>(i)] = arr[i].get<double>();
  }
  return v;
}

json from_vector(const VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

AgentModel model_from_name(const std::string& name, const std::string& path) {
  if (name == "unicycle4") return AgentModel::unicycle();
  if (name == "quadrotor6") return AgentModel::quadrotor();
  throw ScenarioError("unknown model '" + name + "' at '" + path + "'");
}

std::vector<int> angle_indices_for(ModelKind kind) {
  return kind == ModelKind::Unicycle4 ? std::vector<int>{2}
                                      : std::vector<int>{3, 4, 5};
}

std::vector<int> position_indices_for(ModelKind kind) {
  return kind == ModelKind::Unicycle4 ? std::vector<int>{0, 1}
                                      : std::vector<int>{0, 1, 2};
}

VectorXd diag6(double a, double b, double c, double d, double e, double f) {
  VectorXd v(6);
  v << a, b, c, d, e, f;
  return v;
}

AgentConfig unicycle_agent(double px, double py, double heading, double speed,
                           double gx, double gy, double gheading) {
  AgentConfig a;
  a.model = "unicycle4";
  a.start = VectorXd(4);
  a.start << px, py, heading, speed;
  a.goal = VectorXd(4);
  a.goal << gx, gy, gheading, 0.0;
  a.q_diag = VectorXd(4);
  a.q_diag << 10.0, 10.0, 1.0, 1.0;
  a.r_diag = VectorXd(2);
  a.r_diag << 1.0, 1.0;
  a.qt_diag = 10.0 * a.q_diag;
  return a;
}

AgentConfig quad_agent(const VectorXd& start6, const VectorXd& goal6) {
  AgentConfig a;
  a.model = "quadrotor6";
  a.start = start6;
  a.goal = goal6;
  a.q_diag = diag6(10, 10, 10, 1, 1, 1);
  // Vertical velocity is the cheap avoidance channel: with it priced like the
  // horizontal velocities the pair sidesteps in-plane instead of splitting in
  // altitude when they meet.
  a.r_diag = diag6(1, 1, 0.2, 1, 1, 1);
  a.qt_diag = 10.0 * a.q_diag;
  return a;
}

}  // namespace

int ScenarioConfig::plan_horizon_steps() const {
  return static_cast<int>(std::llround(plan_horizon_s / dt));
}

int ScenarioConfig::duration_steps() const {
  return static_cast<int>(std::llround(duration_s / dt));
}

GameDefinition ScenarioConfig::make_game(int horizon_steps) const {
  if (agents.empty()) throw ScenarioError("scenario has no agents");
  GameDefinition game;
  game.horizon = horizon_steps;
  game.dt = dt;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const AgentConfig& ac = agents[i];
    const std::string path = "agents[" + std::to_string(i) + "].";
    AgentSpec spec;
    spec.model = model_from_name(ac.model, path + "model");
    if (ac.start.size() != spec.model.state_dim ||
        ac.goal.size() != spec.model.state_dim) {
      throw ScenarioError(path + "start/goal length does not match model '" +
                          ac.model + "'");
    }
    if (ac.q_diag.size() != spec.model.state_dim ||
        ac.r_diag.size() != spec.model.input_dim ||
        ac.qt_diag.size() != spec.model.state_dim) {
      throw ScenarioError(path + "weight diagonal length mismatch");
    }
    spec.tracking.q_diag = ac.q_diag;
    spec.tracking.r_diag = ac.r_diag;
    spec.tracking.qt_diag = ac.qt_diag;
    spec.tracking.x_ref = ac.goal;
    spec.tracking.u_ref = VectorXd::Zero(spec.model.input_dim);
    spec.tracking.angle_indices = angle_indices_for(spec.model.kind);
    spec.tracking.validate();
    game.agents.push_back(std::move(spec));
  }

  const int n = game.num_agents();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      CollisionCost cc;
      cc.beta = beta;
      cc.d_prox = d_prox;
      auto pi = position_indices_for(game.agents[i].model.kind);
      auto pj = position_indices_for(game.agents[j].model.kind);
      // Mixed 2D/3D pairs measure distance in the shared plane.
      const std::size_t dim = std::min(pi.size(), pj.size());
      pi.resize(dim);
      pj.resize(dim);
      cc.position_indices_i = pi;
      cc.position_indices_j = pj;
      game.couplings[{i, j}] = cc;
    }
  }
  for (const CouplingOverride& ov : pairs) {
    if (ov.i < 0 || ov.j < 0 || ov.i >= n || ov.j >= n || ov.i == ov.j) {
      throw ScenarioError("coupling override references invalid pair");
    }
    for (auto key : {std::make_pair(ov.i, ov.j), std::make_pair(ov.j, ov.i)}) {
      if (ov.beta) game.couplings[key].beta = *ov.beta;
      if (ov.d_prox) game.couplings[key].d_prox = *ov.d_prox;
    }
  }
  const SymmetryReport& report = game.validate();
  if (!report.ok) {
    throw ScenarioError("scenario couplings violate symmetry: " +
                        report.message);
  }
  return game;
}

VectorXd ScenarioConfig::initial_state() const {
  int total = 0;
  for (const auto& a : agents) total += static_cast<int>(a.start.size());
  VectorXd x0(total);
  int off = 0;
  for (const auto& a : agents) {
    x0.segment(off, a.start.size()) = a.start;
    off += static_cast<int>(a.start.size());
  }
  return x0;
}

MpcConfig ScenarioConfig::mpc_config() const {
  MpcConfig cfg;
  cfg.plan_horizon_steps = plan_horizon_steps();
  cfg.dt = dt;
  cfg.total_duration = duration_s;
  cfg.solver = solver;
  return cfg;
}

ScenarioConfig load(const json& doc) {
  if (!doc.is_object()) throw ScenarioError("scenario document is not an object");
  check_keys(doc, {"agents", "coupling", "timing", "solver"}, "");
  if (!doc.contains("agents") || !doc.contains("coupling") ||
      !doc.contains("timing")) {
    throw ScenarioError("scenario requires 'agents', 'coupling', 'timing'");
  }

  ScenarioConfig cfg;
  const json& agents = doc.at("agents");
  if (!agents.is_array() || agents.empty()) {
    throw ScenarioError("'agents' must be a non-empty array");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string path = "agents[" + std::to_string(i) + "].";
    const json& a = agents[i];
    check_keys(a, {"model", "start", "goal", "q_diag", "r_diag", "qt_diag"},
               path);
    AgentConfig ac;
    ac.model = a.at("model").get<std::string>();
    ac.start = to_vector(a.at("start"), path + "start");
    ac.goal = to_vector(a.at("goal"), path + "goal");
    ac.q_diag = to_vector(a.at("q_diag"), path + "q_diag");
    ac.r_diag = to_vector(a.at("r_diag"), path + "r_diag");
    ac.qt_diag = a.contains("qt_diag")
                     ? to_vector(a.at("qt_diag"), path + "qt_diag")
                     : ac.q_diag;
    cfg.agents.push_back(std::move(ac));
  }

  const json& coupling = doc.at("coupling");
  check_keys(coupling, {"beta", "d_prox", "pairs"}, "coupling.");
  cfg.beta = coupling.at("beta").get<double>();
  cfg.d_prox = coupling.at("d_prox").get<double>();
  if (cfg.d_prox <= 0.0) throw ScenarioError("coupling.d_prox must be > 0");
  if (cfg.beta < 0.0) throw ScenarioError("coupling.beta must be >= 0");
  if (coupling.contains("pairs")) {
    std::map<std::pair<int, int>, std::pair<double, double>> seen;
    for (std::size_t k = 0; k < coupling["pairs"].size(); ++k) {
      const json& p = coupling["pairs"][k];
      const std::string path = "coupling.pairs[" + std::to_string(k) + "].";
      check_keys(p, {"i", "j", "beta", "d_prox"}, path);
      CouplingOverride ov;
      ov.i = p.at("i").get<int>();
      ov.j = p.at("j").get<int>();
      if (p.contains("beta")) ov.beta = p["beta"].get<double>();
      if (p.contains("d_prox")) ov.d_prox = p["d_prox"].get<double>();
      const auto key = std::make_pair(std::min(ov.i, ov.j), std::max(ov.i, ov.j));
      const auto val = std::make_pair(ov.beta.value_or(cfg.beta),
                                      ov.d_prox.value_or(cfg.d_prox));
      const auto it = seen.find(key);
      if (it != seen.end() && it->second != val) {
        std::ostringstream msg;
        msg << "asymmetric coupling override for pair (" << key.first << ","
            << key.second << ")";
        throw ScenarioError(msg.str());
      }
      seen[key] = val;
      cfg.pairs.push_back(ov);
    }
  }

  const json& timing = doc.at("timing");
  check_keys(timing, {"dt", "plan_horizon_s", "duration_s"}, "timing.");
  cfg.dt = timing.at("dt").get<double>();
  cfg.plan_horizon_s = timing.at("plan_horizon_s").get<double>();
  cfg.duration_s = timing.at("duration_s").get<double>();
  if (cfg.dt <= 0.0) throw ScenarioError("timing.dt must be > 0");

  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    check_keys(s, {"max_iterations", "rel_tol", "abs_tol", "reg_max"},
               "solver.");
    if (s.contains("max_iterations"))
      cfg.solver.max_iterations = s["max_iterations"].get<int>();
    if (s.contains("rel_tol")) cfg.solver.rel_tol = s["rel_tol"].get<double>();
    if (s.contains("abs_tol")) cfg.solver.abs_tol = s["abs_tol"].get<double>();
    if (s.contains("reg_max")) cfg.solver.reg_max = s["reg_max"].get<double>();
  }

  // Surface dimension problems at load time.
  (void)cfg.make_game(std::max(cfg.plan_horizon_steps(), 2));
  return cfg;
}

ScenarioConfig load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario parse error: ") + e.what());
  }
  return load(doc);
}

json to_json(const ScenarioConfig& cfg) {
  json doc;
  doc["agents"] = json::array();
  for (const auto& a : cfg.agents) {
    json ja;
    ja["model"] = a.model;
    ja["start"] = from_vector(a.start);
    ja["goal"] = from_vector(a.goal);
    ja["q_diag"] = from_vector(a.q_diag);
    ja["r_diag"] = from_vector(a.r_diag);
    ja["qt_diag"] = from_vector(a.qt_diag);
    doc["agents"].push_back(std::move(ja));
  }
  doc["coupling"]["beta"] = cfg.beta;
  doc["coupling"]["d_prox"] = cfg.d_prox;
  if (!cfg.pairs.empty()) {
    json arr = json::array();
    for (const auto& ov : cfg.pairs) {
      json p;
      p["i"] = ov.i;
      p["j"] = ov.j;
      if (ov.beta) p["beta"] = *ov.beta;
      if (ov.d_prox) p["d_prox"] = *ov.d_prox;
      arr.push_back(std::move(p));
    }
    doc["coupling"]["pairs"] = std::move(arr);
  }
  doc["timing"]["dt"] = cfg.dt;
  doc["timing"]["plan_horizon_s"] = cfg.plan_horizon_s;
  doc["timing"]["duration_s"] = cfg.duration_s;
  doc["solver"]["max_iterations"] = cfg.solver.max_iterations;
  doc["solver"]["rel_tol"] = cfg.solver.rel_tol;
  doc["solver"]["abs_tol"] = cfg.solver.abs_tol;
  doc["solver"]["reg_max"] = cfg.solver.reg_max;
  return doc;
}

ScenarioConfig builtin(const std::string& name) {
  ScenarioConfig cfg;
  // Random initial conditions (Monte-Carlo sampling over these scenarios) can
  // start deep inside the proximity hinges, where progress per iteration is
  // small; the default cap of 100 leaves a few percent of samples unconverged.
  cfg.solver.max_iterations = 400;
  if (name == "intersection3") {
    // Three unicycles 8 m from a common origin at bearings 0/120/240 deg,
    // heading inward at 2 m/s, goals at the antipodal points.
    const double radius = 8.0;
    for (int i = 0; i < 3; ++i) {
      const double bearing = 2.0 * M_PI * i / 3.0;
      const double heading = wrap_angle(bearing + M_PI);
      cfg.agents.push_back(unicycle_agent(
          radius * std::cos(bearing), radius * std::sin(bearing), heading, 2.0,
          -radius * std::cos(bearing), -radius * std::sin(bearing), heading));
    }
    cfg.beta = 50.0;
    cfg.d_prox = 2.4;
    cfg.dt = 0.1;
    cfg.plan_horizon_s = 1.0;
    cfg.duration_s = 15.0;
  } else if (name == "quad_swap") {
    // Position swap at equal altitude. The small opposite initial pitches
    // break the vertical mirror symmetry that would otherwise pin both
    // vehicles to the z = 2 plane under a deterministic solve; on hardware
    // state noise plays that role.
    VectorXd sa(6), sb(6), ga(6), gb(6);
    sa << 0.0, 1.0, 2.0, 0.0, 0.05, 0.0;
    sb << 1.5, 0.0, 2.0, 0.0, -0.02, 0.0;
    ga << 1.5, 0.0, 2.0, 0.0, 0.0, 0.0;
    gb << 0.0, 1.0, 2.0, 0.0, 0.0, 0.0;
    cfg.agents.push_back(quad_agent(sa, ga));
    cfg.agents.push_back(quad_agent(sb, gb));
    cfg.beta = 50.0;
    cfg.d_prox = 0.8;
    cfg.dt = 0.2;
    cfg.plan_horizon_s = 1.0;
    cfg.duration_s = 8.0;
  } else if (name == "quad_diagonal") {
    VectorXd sa(6), sb(6), ga(6), gb(6);
    sa << 0.0, 1.0, 1.5, 0.0, 0.0, 0.0;
    sb << 1.5, 0.0, 1.5, 0.0, 0.0, 0.0;
    ga << 1.5, 0.0, 2.5, 0.0, 0.0, 0.0;
    gb << 0.0, 1.0, 2.5, 0.0, 0.0, 0.0;
    cfg.agents.push_back(quad_agent(sa, ga));
    cfg.agents.push_back(quad_agent(sb, gb));
    cfg.beta = 50.0;
    cfg.d_prox = 0.8;
    cfg.dt = 0.2;
    cfg.plan_horizon_s = 1.0;
    cfg.duration_s = 8.0;
  } else {
    throw ScenarioError("unknown builtin scenario: " + name);
  }
  return cfg;
}

std::vector<std::string> builtin_names() {
  return {"intersection3", "quad_swap", "quad_diagonal"};
}

ScenarioConfig sample_initials(const MonteCarloConfig& mc,
                               const ScenarioConfig& base, int k) {
  if (k < 0 || k >= mc.samples) {
    throw std::invalid_argument("sample_initials: index out of range");
  }
  SplitMix64 rng(SplitMix64::mix_key(mc.seed, static_cast<uint64_t>(k)));
  ScenarioConfig out = base;
  for (auto& agent : out.agents) {
    if (agent.model != "unicycle4") {
      throw ScenarioError("sample_initials supports unicycle agents only");
    }
    agent.start[0] = rng.uniform(mc.pos_min, mc.pos_max);
    agent.start[1] = rng.uniform(mc.pos_min, mc.pos_max);
    agent.start[2] = rng.uniform(mc.heading_min, mc.heading_max);
    agent.start[3] = rng.uniform(mc.speed_min, mc.speed_max);
  }
  return out;
}

}  // namespace pilqr
