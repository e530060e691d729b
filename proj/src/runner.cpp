#include "pilqr/runner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pilqr {

namespace {

std::vector<int> position_indices(const AgentModel& model) {
  return model.kind == ModelKind::Unicycle4 ? std::vector<int>{0, 1}
                                            : std::vector<int>{0, 1, 2};
}

}  // namespace

std::vector<VectorXd> shift_warm_start(const std::vector<VectorXd>& previous) {
  if (previous.empty()) {
    throw std::invalid_argument("shift_warm_start: empty control sequence");
  }
  std::vector<VectorXd> shifted(previous.begin() + 1, previous.end());
  shifted.push_back(previous.back());
  return shifted;
}

double min_pairwise_distance(const GameDefinition& game, const VectorXd& x) {
  const JointLayout layout = game.layout();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < game.num_agents(); ++i) {
    for (int j = i + 1; j < game.num_agents(); ++j) {
      const CollisionCost& cc = game.couplings.at({i, j});
      double d2 = 0.0;
      for (std::size_t a = 0; a < cc.position_indices_i.size(); ++a) {
        const double diff =
            x[layout.state_offset[i] + cc.position_indices_i[a]] -
            x[layout.state_offset[j] + cc.position_indices_j[a]];
        d2 += diff * diff;
      }
      best = std::min(best, std::sqrt(d2));
    }
  }
  return best;
}

std::vector<double> goal_errors(const GameDefinition& game, const VectorXd& x) {
  const JointLayout layout = game.layout();
  std::vector<double> errors(game.num_agents());
  for (int i = 0; i < game.num_agents(); ++i) {
    double d2 = 0.0;
    for (int idx : position_indices(game.agents[i].model)) {
      const double diff = x[layout.state_offset[i] + idx] -
                          game.agents[i].tracking.x_ref[idx];
      d2 += diff * diff;
    }
    errors[i] = std::sqrt(d2);
  }
  return errors;
}

MpcLog run(const GameDefinition& game, const VectorXd& x0,
           const MpcConfig& config) {
  if (config.plan_horizon_steps < 2) {
    throw std::invalid_argument("run: plan_horizon_steps must be >= 2");
  }
  if (config.total_duration < config.dt) {
    throw std::invalid_argument("run: total_duration must be >= dt");
  }

  GameDefinition plan_game = game;
  plan_game.horizon = config.plan_horizon_steps;
  plan_game.dt = config.dt;
  PotentialOcp ocp = build_potential_ocp(plan_game);
  const std::vector<AgentModel> models = plan_game.models();
  const JointLayout layout = plan_game.layout();

  const int total_steps =
      static_cast<int>(std::llround(config.total_duration / config.dt));

  MpcLog log;
  log.executed_states.push_back(x0);
  log.min_distance_trace.push_back(min_pairwise_distance(plan_game, x0));
  log.goal_error_trace.push_back(goal_errors(plan_game, x0));

  std::vector<VectorXd> warm;
  std::vector<VectorXd> pending;  // remainder of the last good plan
  VectorXd x = x0;

  for (int k = 0; k < total_steps; ++k) {
    const std::vector<VectorXd>* init =
        (config.warm_start == WarmStart::Shift && !warm.empty()) ? &warm
                                                                 : nullptr;
    SolveResult sr = solve(ocp, x, init, config.solver);

    ReplanRecord record;
    record.report = sr.report;
    record.plan = sr.trajectory;
    record.degraded = !sr.report.converged;

    VectorXd u;
    if (!record.degraded || pending.empty()) {
      u = sr.controls[0];
      pending.assign(sr.controls.begin() + 1, sr.controls.end());
      warm = shift_warm_start(sr.controls);
    } else {
      // Degraded: reuse the previous plan's next step.
      u = pending.front();
      pending.erase(pending.begin());
      if (pending.empty()) pending.push_back(u);
      warm = shift_warm_start(warm);
    }
    log.any_degraded = log.any_degraded || record.degraded;
    log.replans.push_back(std::move(record));

    x = joint_step(models, make_joint_state(layout, x),
                   make_joint_control(layout, u), config.dt)
            .values;
    log.executed_controls.push_back(u);
    log.executed_states.push_back(x);
    log.min_distance_trace.push_back(min_pairwise_distance(plan_game, x));
    log.goal_error_trace.push_back(goal_errors(plan_game, x));

    const auto& errs = log.goal_error_trace.back();
    if (std::all_of(errs.begin(), errs.end(), [&](double e) {
          return e <= config.stop_tolerance;
        })) {
      log.reached_goals = true;
      break;
    }
  }
  if (!log.reached_goals) {
    const auto& errs = log.goal_error_trace.back();
    log.reached_goals = std::all_of(errs.begin(), errs.end(), [&](double e) {
      return e <= config.stop_tolerance;
    });
  }
  return log;
}

}  // namespace pilqr
