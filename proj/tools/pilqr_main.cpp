// Command-line front end: one-shot potential solve, receding-horizon run,
// Nash verification, Monte-Carlo benchmark, and SVG plotting.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pilqr/artifacts.hpp"
#include "pilqr/bench.hpp"
#include "pilqr/game.hpp"
#include "pilqr/runner.hpp"
#include "pilqr/scenarios.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pilqr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInputError = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitGapExceeded = 3;

struct ScenarioArgs {
  std::string scenario_path;
  std::string builtin_name;
  double duration_override = -1.0;

  ScenarioConfig resolve() const {
    if (!scenario_path.empty() && !builtin_name.empty()) {
      throw ScenarioError("--scenario and --builtin are mutually exclusive");
    }
    ScenarioConfig cfg;
    if (!scenario_path.empty()) {
      cfg = load_file(scenario_path);
    } else if (!builtin_name.empty()) {
      cfg = builtin(builtin_name);
    } else {
      throw ScenarioError("one of --scenario or --builtin is required");
    }
    if (duration_override > 0.0) cfg.duration_s = duration_override;
    return cfg;
  }
};

void add_scenario_flags(CLI::App* cmd, ScenarioArgs& args) {
  cmd->add_option("--scenario", args.scenario_path, "Scenario JSON file");
  cmd->add_option("--builtin", args.builtin_name,
                  "Built-in scenario: intersection3 | quad_swap | quad_diagonal");
  cmd->add_option("--duration", args.duration_override,
                  "Override scenario duration (seconds)");
}

std::vector<VectorXd> goal_positions_of(const ScenarioConfig& cfg) {
  std::vector<VectorXd> goals;
  for (const auto& a : cfg.agents) {
    goals.push_back(a.goal.head(a.model == "unicycle4" ? 2 : 3));
  }
  return goals;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

int cmd_solve(const ScenarioArgs& args, const std::string& out_dir, bool plot,
              bool verify, double tolerance) {
  const ScenarioConfig cfg = args.resolve();
  const GameDefinition game = cfg.make_game();
  const PotentialOcp ocp = build_potential_ocp(game);
  const SolveResult sr = solve(ocp, cfg.initial_state(), nullptr, cfg.solver);

  fs::create_directories(out_dir);
  write_trajectory_csv((fs::path(out_dir) / "trajectory.csv").string(), game,
                       sr.trajectory.states, sr.trajectory.controls);
  json report;
  report["solve"] = report_json(sr.report);
  report["total_cost"] = sr.trajectory.total_cost;
  if (verify) {
    const NashGapReport gaps =
        nash_gap(game, sr.controls, cfg.initial_state(), cfg.solver);
    report["nash"] = report_json(gaps);
    report["nash"]["tolerance"] = tolerance;
    report["nash"]["certified"] = gaps.max_relative_gap <= tolerance;
  }
  write_json(fs::path(out_dir) / "report.json", report);
  if (plot) {
    const TrajectoryTable table = read_trajectory_csv(
        (fs::path(out_dir) / "trajectory.csv").string());
    const auto goals = goal_positions_of(cfg);
    write_text_file((fs::path(out_dir) / "trajectory.svg").string(),
                    render_paths_svg(table, cfg.dt, &goals));
  }
  std::cout << (sr.report.converged ? "converged" : "did not converge")
            << " in " << sr.report.iterations << " iterations, cost "
            << sr.trajectory.total_cost << '\n';
  return sr.report.converged ? kExitOk : kExitNotConverged;
}

int cmd_mpc(const ScenarioArgs& args, const std::string& out_dir, bool plot,
            bool keep_plans) {
  const ScenarioConfig cfg = args.resolve();
  const GameDefinition game = cfg.make_game(cfg.plan_horizon_steps());
  const MpcLog log = run(game, cfg.initial_state(), cfg.mpc_config());

  fs::create_directories(out_dir);
  write_trajectory_csv((fs::path(out_dir) / "trajectory.csv").string(), game,
                       log.executed_states, log.executed_controls);
  json report = report_json(log, keep_plans);
  write_json(fs::path(out_dir) / "report.json", report);
  if (plot) {
    const TrajectoryTable table = read_trajectory_csv(
        (fs::path(out_dir) / "trajectory.csv").string());
    const auto goals = goal_positions_of(cfg);
    write_text_file((fs::path(out_dir) / "trajectory.svg").string(),
                    render_paths_svg(table, cfg.dt, &goals));
  }
  std::cout << "executed " << log.executed_controls.size() << " steps, "
            << (log.reached_goals ? "goals reached" : "duration elapsed")
            << (log.any_degraded ? ", degraded replans present" : "") << '\n';
  return log.any_degraded ? kExitNotConverged : kExitOk;
}

int cmd_verify_nash(const ScenarioArgs& args, const std::string& controls_csv,
                    bool resolve_first, double tolerance,
                    const std::string& out_dir) {
  const ScenarioConfig cfg = args.resolve();
  const GameDefinition game = cfg.make_game();

  std::vector<VectorXd> controls;
  if (resolve_first) {
    const PotentialOcp ocp = build_potential_ocp(game);
    controls = solve(ocp, cfg.initial_state(), nullptr, cfg.solver).controls;
  } else {
    if (controls_csv.empty()) {
      throw ScenarioError("verify-nash needs a controls CSV or --resolve");
    }
    const TrajectoryTable table = read_trajectory_csv(controls_csv);
    controls = table.joint_controls();
    if (static_cast<int>(controls.size()) != game.horizon ||
        (!controls.empty() &&
         controls[0].size() != game.layout().total_input())) {
      throw std::runtime_error("controls file does not match scenario horizon");
    }
  }

  const NashGapReport gaps =
      nash_gap(game, controls, cfg.initial_state(), cfg.solver);
  for (const auto& g : gaps.gaps) {
    std::cout << "agent " << g.agent << ": J = " << g.equilibrium_cost
              << ", best response = " << g.best_response_cost
              << ", relative gap = " << g.relative_gap << '\n';
  }
  std::cout << "max relative gap = " << gaps.max_relative_gap
            << " (tolerance " << tolerance << ")\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    json j = report_json(gaps);
    j["tolerance"] = tolerance;
    j["certified"] = gaps.max_relative_gap <= tolerance;
    write_json(fs::path(out_dir) / "nash_report.json", j);
  }
  return gaps.max_relative_gap <= tolerance ? kExitOk : kExitGapExceeded;
}

int cmd_bench(const ScenarioArgs& args, const MonteCarloConfig& mc, int jobs,
              const std::string& out_dir) {
  ScenarioArgs base_args = args;
  if (base_args.scenario_path.empty() && base_args.builtin_name.empty()) {
    base_args.builtin_name = "intersection3";
  }
  const ScenarioConfig base = base_args.resolve();
  const BenchStats stats = run_bench(mc, base, jobs);

  fs::create_directories(out_dir);
  write_json(fs::path(out_dir) / "bench_stats.json", bench_json(stats));
  write_text_file((fs::path(out_dir) / "bench_histogram.svg").string(),
                  render_histogram_svg(stats.solve_times_ms,
                                       "solve time (ms)", 40));
  std::cout << stats.converged_count << "/" << stats.samples
            << " converged, mean " << stats.time_mean_ms << " ms, std "
            << stats.time_std_ms << " ms\n";
  return kExitOk;
}

int cmd_plot(const std::string& csv_path, const ScenarioArgs& args,
             const std::string& out_path) {
  const TrajectoryTable table = read_trajectory_csv(csv_path);
  std::optional<ScenarioConfig> cfg;
  if (!args.scenario_path.empty() || !args.builtin_name.empty()) {
    cfg = args.resolve();
  }
  std::vector<VectorXd> goals;
  double dt = 0.1;
  if (cfg) {
    goals = goal_positions_of(*cfg);
    dt = cfg->dt;
  }
  write_text_file(out_path,
                  render_paths_svg(table, dt, cfg ? &goals : nullptr));
  std::cout << "wrote " << out_path << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nash-equilibrium trajectory planning via potential-game iLQR"};
  app.require_subcommand(1);

  ScenarioArgs args;
  std::string out_dir = "out";
  std::string controls_csv;
  std::string csv_path;
  std::string plot_out = "trajectory.svg";
  bool plot = false, verify = false, keep_plans = false, resolve_first = false;
  double tolerance = 5e-3;
  int jobs = 1;
  MonteCarloConfig mc;

  auto* solve_cmd = app.add_subcommand("solve", "One-shot full-horizon solve");
  add_scenario_flags(solve_cmd, args);
  solve_cmd->add_option("--out", out_dir, "Output directory");
  solve_cmd->add_flag("--plot", plot, "Emit trajectory SVG");
  solve_cmd->add_flag("--verify", verify, "Run the best-response Nash verifier");
  solve_cmd->add_option("--tolerance", tolerance, "Nash gap tolerance");

  auto* mpc_cmd = app.add_subcommand("mpc", "Receding-horizon run");
  add_scenario_flags(mpc_cmd, args);
  mpc_cmd->add_option("--out", out_dir, "Output directory");
  mpc_cmd->add_flag("--plot", plot, "Emit trajectory SVG");
  mpc_cmd->add_flag("--keep-plans", keep_plans,
                    "Record every replan's planned trajectory in the report");

  auto* verify_cmd =
      app.add_subcommand("verify-nash", "Best-response Nash verification");
  add_scenario_flags(verify_cmd, args);
  verify_cmd->add_option("--controls", controls_csv,
                         "Trajectory CSV holding the controls to verify");
  verify_cmd->add_flag("--resolve", resolve_first,
                       "Solve the scenario first and verify that solution");
  verify_cmd->add_option("--tolerance", tolerance, "Nash gap tolerance");
  verify_cmd->add_option("--out", out_dir, "Optional report directory");
  out_dir = "";  // verify-nash writes a report only when asked

  auto* bench_cmd =
      app.add_subcommand("bench", "Seeded Monte-Carlo solve benchmark");
  add_scenario_flags(bench_cmd, args);
  bench_cmd->add_option("--samples", mc.samples, "Sample count");
  bench_cmd->add_option("--seed", mc.seed, "64-bit seed");
  bench_cmd->add_option("--horizon", mc.horizon_s, "Prediction horizon (s)");
  bench_cmd->add_option("--jobs", jobs, "Worker threads");
  bench_cmd->add_option("--out", out_dir, "Output directory");

  auto* plot_cmd = app.add_subcommand("plot", "Render a trajectory CSV to SVG");
  plot_cmd->add_option("csv", csv_path, "Trajectory CSV")->required();
  add_scenario_flags(plot_cmd, args);
  plot_cmd->add_option("--out", plot_out, "Output SVG path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) {
      return cmd_solve(args, out_dir.empty() ? "out" : out_dir, plot, verify,
                       tolerance);
    }
    if (mpc_cmd->parsed()) {
      return cmd_mpc(args, out_dir.empty() ? "out" : out_dir, plot, keep_plans);
    }
    if (verify_cmd->parsed()) {
      return cmd_verify_nash(args, controls_csv, resolve_first, tolerance,
                             out_dir);
    }
    if (bench_cmd->parsed()) {
      return cmd_bench(args, mc, jobs, out_dir.empty() ? "out" : out_dir);
    }
    if (plot_cmd->parsed()) {
      return cmd_plot(csv_path, args, plot_out);
    }
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const GameError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}
