#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pilqr/artifacts.hpp"
#include "pilqr/game.hpp"
#include "pilqr/runner.hpp"
#include "pilqr/scenarios.hpp"

using namespace pilqr;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pilqr_test_" + name);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("trajectory CSV round-trips bit-exactly") {
  const ScenarioConfig cfg = builtin("intersection3");
  GameDefinition game = cfg.make_game(20);
  PotentialOcp ocp = build_potential_ocp(game);
  const SolveResult result =
      solve(ocp, cfg.initial_state(), nullptr, cfg.solver);
  REQUIRE(result.report.converged);

  const auto path = temp_file("roundtrip.csv");
  write_trajectory_csv(path.string(), game, result.trajectory.states,
                       result.trajectory.controls);
  const TrajectoryTable table = read_trajectory_csv(path.string());
  CHECK(table.num_agents == 3);
  CHECK(table.state_dims == std::vector<int>({4, 4, 4}));
  CHECK(table.input_dims == std::vector<int>({2, 2, 2}));
  const auto states = table.joint_states();
  const auto controls = table.joint_controls();
  REQUIRE(states.size() == result.trajectory.states.size());
  REQUIRE(controls.size() == result.trajectory.controls.size());
  for (std::size_t t = 0; t < states.size(); ++t) {
    CHECK(states[t] == result.trajectory.states[t]);  // bitwise
  }
  for (std::size_t t = 0; t < controls.size(); ++t) {
    CHECK(controls[t] == result.trajectory.controls[t]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("CSV header names the per-model columns") {
  const ScenarioConfig cfg = builtin("intersection3");
  GameDefinition game = cfg.make_game(3);
  std::vector<VectorXd> states(4, cfg.initial_state());
  std::vector<VectorXd> controls(3, VectorXd::Zero(6));
  const auto path = temp_file("header.csv");
  write_trajectory_csv(path.string(), game, states, controls);
  const std::string content = slurp(path);
  CHECK(content.rfind("t,agent,px,py,theta,v,omega,a\n", 0) == 0);

  // The terminal row leaves the control fields empty.
  std::istringstream lines(content);
  std::string line, last;
  while (std::getline(lines, line)) {
    if (!line.empty()) last = line;
  }
  CHECK(last.substr(last.size() - 2) == ",,");
  std::filesystem::remove(path);

  const ScenarioConfig quad = builtin("quad_swap");
  GameDefinition qgame = quad.make_game(2);
  std::vector<VectorXd> qstates(3, quad.initial_state());
  std::vector<VectorXd> qcontrols(2, VectorXd::Zero(12));
  const auto qpath = temp_file("header_quad.csv");
  write_trajectory_csv(qpath.string(), qgame, qstates, qcontrols);
  CHECK(slurp(qpath).rfind(
            "t,agent,px,py,pz,roll,pitch,yaw,vbx,vby,vbz,p,q,r\n", 0) == 0);
  std::filesystem::remove(qpath);
}

TEST_CASE("CSV reader rejects malformed input") {
  const auto path = temp_file("bad.csv");
  write_text_file(path.string(), "");
  CHECK_THROWS_AS(read_trajectory_csv(path.string()), std::runtime_error);
  write_text_file(path.string(), "x,y,z\n1,2,3\n");
  CHECK_THROWS_AS(read_trajectory_csv(path.string()), std::runtime_error);
  write_text_file(path.string(), "t,agent,px,py,theta,v,omega,a\n");
  CHECK_THROWS_AS(read_trajectory_csv(path.string()), std::runtime_error);
  // Missing control fields before the final row.
  write_text_file(path.string(),
                  "t,agent,px,py,theta,v,omega,a\n"
                  "0,0,0,0,0,0,,\n"
                  "0.1,0,1,0,0,0,,\n");
  CHECK_THROWS_AS(read_trajectory_csv(path.string()), std::runtime_error);
  // Short row.
  write_text_file(path.string(),
                  "t,agent,px,py,theta,v,omega,a\n"
                  "0,0,0,0\n");
  CHECK_THROWS_AS(read_trajectory_csv(path.string()), std::runtime_error);
  CHECK_THROWS_AS(read_trajectory_csv("/nonexistent.csv"),
                  std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("report JSON carries the solver diagnostics") {
  SolveReport report;
  report.iterations = 3;
  report.cost_trace = {10.0, 5.0, 4.0, 3.9};
  report.converged = true;
  report.reason = TerminationReason::Tolerance;
  const nlohmann::json j = report_json(report);
  CHECK(j.at("iterations") == 3);
  CHECK(j.at("converged") == true);
  CHECK(j.at("termination") == "tolerance");
  CHECK(j.at("cost_trace").size() == 4);

  NashGapReport nash;
  NashGapReport::AgentGap gap;
  gap.agent = 0;
  gap.relative_gap = -1e-12;
  nash.gaps.push_back(gap);
  nash.max_relative_gap = -1e-12;
  const nlohmann::json nj = report_json(nash);
  CHECK(nj.at("agents").size() == 1);
  CHECK(nj.at("max_relative_gap") == -1e-12);
}

TEST_CASE("MPC JSON keeps planned states only when asked") {
  MpcLog log;
  log.executed_states = {VectorXd::Zero(4), VectorXd::Zero(4)};
  log.executed_controls = {VectorXd::Zero(2)};
  log.min_distance_trace = {1.0, 1.0};
  log.goal_error_trace = {{2.0}, {1.5}};
  ReplanRecord record;
  record.plan.states = {VectorXd::Zero(4), VectorXd::Ones(4)};
  log.replans.push_back(record);
  const nlohmann::json with = report_json(log, true);
  CHECK(with.at("replans")[0].contains("planned_states"));
  const nlohmann::json without = report_json(log, false);
  CHECK_FALSE(without.at("replans")[0].contains("planned_states"));
  CHECK(without.at("steps") == 1);
}

TEST_CASE("path plot renders one polyline per agent, goals, and starts") {
  TrajectoryTable table;
  table.num_agents = 2;
  table.state_dims = {4, 4};
  table.input_dims = {2, 2};
  for (int t = 0; t < 5; ++t) {
    std::vector<VectorXd> row(2, VectorXd::Zero(4));
    row[0][0] = t;
    row[1][1] = -t;
    table.states.push_back(row);
  }
  const std::string svg = render_paths_svg(table, 0.1, nullptr);
  CHECK(svg.find("<svg") != std::string::npos);
  std::size_t polylines = 0, pos = 0;
  while ((pos = svg.find("class=\"path\"", pos)) != std::string::npos) {
    ++polylines;
    ++pos;
  }
  CHECK(polylines == 2);
  CHECK(svg.find("<circle") != std::string::npos);
  CHECK(svg.find("altitude") == std::string::npos);  // planar models only
}

TEST_CASE("altitude panel appears exactly for 3D agents") {
  TrajectoryTable table;
  table.num_agents = 2;
  table.state_dims = {6, 6};
  table.input_dims = {6, 6};
  for (int t = 0; t < 5; ++t) {
    std::vector<VectorXd> row(2, VectorXd::Zero(6));
    row[0][0] = t;
    row[0][2] = 2.0 + 0.1 * t;
    row[1][1] = t;
    row[1][2] = 2.0;
    table.states.push_back(row);
  }
  const std::string svg = render_paths_svg(table, 0.2, nullptr);
  CHECK(svg.find("altitude vs time") != std::string::npos);
  std::size_t altitude_lines = 0, pos = 0;
  while ((pos = svg.find("class=\"altitude\"", pos)) != std::string::npos) {
    ++altitude_lines;
    ++pos;
  }
  CHECK(altitude_lines == 2);
}

TEST_CASE("histogram renders bars and survives empty input") {
  const std::string svg =
      render_histogram_svg({1.0, 1.1, 1.2, 5.0, 5.1}, "solve time [ms]", 10);
  CHECK(svg.find("<rect") != std::string::npos);
  CHECK(svg.find("solve time [ms]") != std::string::npos);
  const std::string empty = render_histogram_svg({}, "x", 10);
  CHECK(empty.find("<svg") != std::string::npos);
}

TEST_CASE("write_text_file reports unwritable paths") {
  CHECK_THROWS_AS(write_text_file("/nonexistent_dir/file.txt", "x"),
                  std::runtime_error);
}
