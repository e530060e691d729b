#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pilqr/game.hpp"
#include "pilqr/runner.hpp"
#include "pilqr/scenarios.hpp"

namespace pilqr {

/// Trajectory table: one row per (t, agent) with header
/// t,agent,<state columns>,<control columns>. Column names are fixed per
/// model kind; the terminal row has empty control fields.
void write_trajectory_csv(const std::string& path, const GameDefinition& game,
                          const std::vector<VectorXd>& states,
                          const std::vector<VectorXd>& controls);

struct TrajectoryTable {
  int num_agents = 0;
  std::vector<int> state_dims;
  std::vector<int> input_dims;
  // [t][agent]
  std::vector<std::vector<VectorXd>> states;
  std::vector<std::vector<VectorXd>> controls;  // one fewer row than states

  std::vector<VectorXd> joint_states() const;
  std::vector<VectorXd> joint_controls() const;
};

/// Parses a trajectory CSV back into per-agent sequences. Throws
/// std::runtime_error on malformed input.
TrajectoryTable read_trajectory_csv(const std::string& path);

nlohmann::json report_json(const SolveReport& report);
nlohmann::json report_json(const NashGapReport& report);
nlohmann::json report_json(const MpcLog& log, bool keep_plans);

/// Top-down x-y path plot (start circles, goal crosses), plus an
/// altitude-vs-time panel when any agent has a third position coordinate.
/// Goals default to each path's final point when none are supplied.
std::string render_paths_svg(const TrajectoryTable& table, double dt,
                             const std::vector<VectorXd>* goal_positions);

std::string render_histogram_svg(const std::vector<double>& values,
                                 const std::string& x_label, int bins);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace pilqr
