#include <doctest.h>

#include <cmath>

#include "pilqr/runner.hpp"
#include "pilqr/scenarios.hpp"

using namespace pilqr;

namespace {

GameDefinition head_on_game() {
  GameDefinition game;
  for (int i = 0; i < 2; ++i) {
    AgentSpec spec;
    spec.model = AgentModel::unicycle();
    TrackingCost& t = spec.tracking;
    t.q_diag = VectorXd(4);
    t.q_diag << 10, 10, 1, 1;
    t.r_diag = VectorXd::Ones(2);
    t.qt_diag = 10.0 * t.q_diag;
    // Offset lanes: exactly mirror-symmetric head-on starts would pin a
    // deterministic solve to the centerline and deadlock the pair.
    t.x_ref = VectorXd(4);
    t.x_ref << (i == 0 ? 6.0 : -6.0), (i == 0 ? 0.5 : -0.5),
        (i == 0 ? 0.0 : M_PI), 0.0;
    t.u_ref = VectorXd::Zero(2);
    t.angle_indices = {2};
    game.agents.push_back(std::move(spec));
  }
  for (auto [i, j] : {std::pair{0, 1}, std::pair{1, 0}}) {
    CollisionCost cc;
    cc.beta = 50.0;
    cc.d_prox = 1.5;
    cc.position_indices_i = {0, 1};
    cc.position_indices_j = {0, 1};
    game.couplings[{i, j}] = cc;
  }
  game.horizon = 10;
  game.dt = 0.1;
  REQUIRE(game.validate().ok);
  return game;
}

VectorXd head_on_start() {
  VectorXd x0(8);
  x0 << -6.0, 0.5, 0.0, 2.0, 6.0, -0.5, M_PI, 2.0;
  return x0;
}

}  // namespace

TEST_CASE("shift_warm_start drops the head and repeats the tail") {
  std::vector<VectorXd> seq;
  for (int k = 0; k < 4; ++k) seq.push_back(VectorXd::Constant(2, k));
  const std::vector<VectorXd> shifted = shift_warm_start(seq);
  REQUIRE(shifted.size() == 4);
  CHECK(shifted[0] == seq[1]);
  CHECK(shifted[2] == seq[3]);
  CHECK(shifted[3] == seq[3]);
  CHECK_THROWS_AS(shift_warm_start({}), std::invalid_argument);
}

TEST_CASE("min_pairwise_distance and goal_errors hand values") {
  GameDefinition game = head_on_game();
  VectorXd x(8);
  x << 0.0, 0.0, 0.0, 0.0, 3.0, 4.0, 0.0, 0.0;
  CHECK(min_pairwise_distance(game, x) == doctest::Approx(5.0));
  const std::vector<double> errs = goal_errors(game, x);
  REQUIRE(errs.size() == 2);
  CHECK(errs[0] == doctest::Approx(std::hypot(6.0, 0.5)));
  CHECK(errs[1] == doctest::Approx(std::hypot(9.0, 4.5)));
}

TEST_CASE("run validates its configuration") {
  GameDefinition game = head_on_game();
  MpcConfig config;
  config.plan_horizon_steps = 1;
  CHECK_THROWS_AS(run(game, head_on_start(), config), std::invalid_argument);
  config.plan_horizon_steps = 10;
  config.total_duration = 0.01;
  config.dt = 0.1;
  CHECK_THROWS_AS(run(game, head_on_start(), config), std::invalid_argument);
}

TEST_CASE("first MPC replan from a zero warm start equals the standalone solve") {
  GameDefinition game = head_on_game();
  MpcConfig config;
  config.plan_horizon_steps = 10;
  config.dt = 0.1;
  config.total_duration = 0.1;  // exactly one replan
  config.warm_start = WarmStart::Zero;
  const MpcLog log = run(game, head_on_start(), config);
  REQUIRE(log.replans.size() == 1);

  GameDefinition plan_game = game;
  plan_game.horizon = config.plan_horizon_steps;
  PotentialOcp ocp = build_potential_ocp(plan_game);
  const SolveResult standalone =
      solve(ocp, head_on_start(), nullptr, config.solver);
  CHECK(log.replans[0].plan.total_cost ==
        doctest::Approx(standalone.trajectory.total_cost));
  CHECK(log.executed_controls[0] == standalone.controls[0]);
}

TEST_CASE("executed trajectory replays exactly through the joint dynamics") {
  GameDefinition game = head_on_game();
  MpcConfig config;
  config.plan_horizon_steps = 10;
  config.dt = 0.1;
  config.total_duration = 2.0;
  const MpcLog log = run(game, head_on_start(), config);
  REQUIRE(log.executed_controls.size() >= 1);
  REQUIRE(log.executed_states.size() == log.executed_controls.size() + 1);
  const auto models = game.models();
  const JointLayout layout = game.layout();
  for (std::size_t k = 0; k < log.executed_controls.size(); ++k) {
    const VectorXd expected =
        joint_step(models, make_joint_state(layout, log.executed_states[k]),
                   make_joint_control(layout, log.executed_controls[k]),
                   config.dt)
            .values;
    CHECK(log.executed_states[k + 1] == expected);  // bitwise replay
  }
  CHECK(log.min_distance_trace.size() == log.executed_states.size());
  CHECK(log.goal_error_trace.size() == log.executed_states.size());
}

TEST_CASE("shifted warm starts make later replans cheap") {
  GameDefinition game = head_on_game();
  MpcConfig config;
  config.plan_horizon_steps = 10;
  config.dt = 0.1;
  config.total_duration = 3.0;
  const MpcLog log = run(game, head_on_start(), config);
  REQUIRE(log.replans.size() >= 5);
  CHECK_FALSE(log.any_degraded);

  // Shifted plans are near-optimal for the next problem, so the warm-started
  // loop should spend clearly fewer iterations than one replanning from zero
  // every step, and some replans should converge immediately.
  MpcConfig cold = config;
  cold.warm_start = WarmStart::Zero;
  const MpcLog cold_log = run(game, head_on_start(), cold);
  auto total_iters = [](const MpcLog& l) {
    int sum = 0;
    for (const auto& r : l.replans) sum += r.report.iterations;
    return sum;
  };
  CHECK(total_iters(log) < total_iters(cold_log));
  int cheap = 0;
  for (std::size_t k = 1; k < log.replans.size(); ++k) {
    if (log.replans[k].report.iterations <= 2) ++cheap;
  }
  CHECK(cheap * 2 >= static_cast<int>(log.replans.size()) - 1);
}

TEST_CASE("agents parked at their goals stop immediately") {
  GameDefinition game = head_on_game();
  VectorXd x0(8);
  x0 << 6.0, 0.5, 0.0, 0.0, -6.0, -0.5, M_PI, 0.0;  // at goal, zero speed
  MpcConfig config;
  config.plan_horizon_steps = 10;
  config.dt = 0.1;
  config.total_duration = 5.0;
  const MpcLog log = run(game, x0, config);
  CHECK(log.reached_goals);
  CHECK(log.replans.size() <= 2);
}

TEST_CASE("MPC drives the head-on pair around each other to their goals") {
  GameDefinition game = head_on_game();
  MpcConfig config;
  config.plan_horizon_steps = 10;
  config.dt = 0.1;
  config.total_duration = 12.0;
  config.stop_tolerance = 0.2;
  const MpcLog log = run(game, head_on_start(), config);
  CHECK(log.reached_goals);
  CHECK_FALSE(log.any_degraded);
  double min_dist = std::numeric_limits<double>::infinity();
  for (double d : log.min_distance_trace) min_dist = std::min(min_dist, d);
  CHECK(min_dist > 0.5);  // the hinge keeps them apart
  // Monotone per-replan cost traces.
  for (const auto& replan : log.replans) {
    for (std::size_t k = 1; k < replan.report.cost_trace.size(); ++k) {
      CHECK(replan.report.cost_trace[k] <= replan.report.cost_trace[k - 1]);
    }
  }
}

TEST_CASE("a starved solver is logged as degraded but the loop continues") {
  GameDefinition game = head_on_game();
  MpcConfig config;
  config.plan_horizon_steps = 10;
  config.dt = 0.1;
  config.total_duration = 1.0;
  config.solver.max_iterations = 0;  // every replan fails to converge
  config.solver.rel_tol = 0.0;
  config.solver.abs_tol = 0.0;
  const MpcLog log = run(game, head_on_start(), config);
  CHECK(log.any_degraded);
  CHECK(log.executed_controls.size() == 10);
  for (const auto& replan : log.replans) {
    CHECK_FALSE(replan.report.converged);
  }
}
