#pragma once

#include <vector>

#include "pilqr/game.hpp"

namespace pilqr {

enum class WarmStart { Shift, Zero };

struct MpcConfig {
  int plan_horizon_steps = 10;
  double dt = 0.1;
  double total_duration = 10.0;
  WarmStart warm_start = WarmStart::Shift;
  SolverConfig solver;
  double stop_tolerance = 0.05;  // goal position distance, meters
};

struct ReplanRecord {
  SolveReport report;
  NominalTrajectory plan;
  bool degraded = false;  // solver failed, previous plan reused
};

struct MpcLog {
  std::vector<VectorXd> executed_states;    // size steps + 1
  std::vector<VectorXd> executed_controls;  // size steps
  std::vector<ReplanRecord> replans;
  std::vector<double> min_distance_trace;  // min pairwise position distance
  std::vector<std::vector<double>> goal_error_trace;  // [step][agent]
  bool any_degraded = false;
  bool reached_goals = false;
};

/// Drop the first control, duplicate the last.
std::vector<VectorXd> shift_warm_start(const std::vector<VectorXd>& previous);

/// Receding-horizon loop: solve the potential OCP over plan_horizon_steps,
/// execute the first control through joint_step, shift, replan. Terminates at
/// total_duration or once every agent's position is within stop_tolerance of
/// its goal. A replan that fails to converge is logged as degraded and the
/// previous plan's next step is reused. The game's horizon/dt fields are
/// overridden by the MpcConfig.
MpcLog run(const GameDefinition& game, const VectorXd& x0,
           const MpcConfig& config);

/// Minimum pairwise position distance at a joint state, using each coupling's
/// position indices.
double min_pairwise_distance(const GameDefinition& game, const VectorXd& x);

/// Per-agent position distance to goal.
std::vector<double> goal_errors(const GameDefinition& game, const VectorXd& x);

}  // namespace pilqr
