#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pilqr/game.hpp"
#include "pilqr/runner.hpp"

namespace pilqr {

struct AgentConfig {
  std::string model;  // "unicycle4" | "quadrotor6"
  VectorXd start;
  VectorXd goal;
  VectorXd q_diag;
  VectorXd r_diag;
  VectorXd qt_diag;
};

struct CouplingOverride {
  int i = 0;
  int j = 0;
  std::optional<double> beta;
  std::optional<double> d_prox;
};

struct ScenarioConfig {
  std::vector<AgentConfig> agents;
  double beta = 1.0;
  double d_prox = 2.4;
  std::vector<CouplingOverride> pairs;
  double dt = 0.1;
  double plan_horizon_s = 1.0;
  double duration_s = 10.0;
  SolverConfig solver;

  int plan_horizon_steps() const;
  int duration_steps() const;

  /// Builds a validated GameDefinition over the given discrete horizon.
  GameDefinition make_game(int horizon_steps) const;
  /// Full-horizon game (duration_s / dt steps).
  GameDefinition make_game() const { return make_game(duration_steps()); }

  VectorXd initial_state() const;
  MpcConfig mpc_config() const;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strict parse: unknown fields are rejected, asymmetric per-pair overrides
/// are rejected naming the pair, model/state dimension mismatches fail.
ScenarioConfig load(const nlohmann::json& doc);
ScenarioConfig load_file(const std::string& path);
nlohmann::json to_json(const ScenarioConfig& config);

/// Built-in scenarios: intersection3, quad_swap, quad_diagonal.
ScenarioConfig builtin(const std::string& name);
std::vector<std::string> builtin_names();

struct MonteCarloConfig {
  int samples = 1000;
  uint64_t seed = 0;
  double pos_min = -10.0, pos_max = 10.0;     // sampling box, meters
  double heading_min = -M_PI, heading_max = M_PI;
  double speed_min = 0.0, speed_max = 3.0;    // m/s
  double horizon_s = 5.0;                     // prediction horizon
};

/// Deterministic function of (seed, k): agent start positions uniform in the
/// box, headings and speeds uniform in their ranges; goals inherited from the
/// base scenario. Unicycle agents only.
ScenarioConfig sample_initials(const MonteCarloConfig& mc,
                               const ScenarioConfig& base, int k);

}  // namespace pilqr
