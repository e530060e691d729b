#include "pilqr/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pilqr {

namespace {

std::vector<std::string> state_column_names(ModelKind kind) {
  return kind == ModelKind::Unicycle4
             ? std::vector<std::string>{"px", "py", "theta", "v"}
             : std::vector<std::string>{"px", "py", "pz",
                                        "roll", "pitch", "yaw"};
}

std::vector<std::string> input_column_names(ModelKind kind) {
  return kind == ModelKind::Unicycle4
             ? std::vector<std::string>{"omega", "a"}
             : std::vector<std::string>{"vbx", "vby", "vbz", "p", "q", "r"};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

void write_trajectory_csv(const std::string& path, const GameDefinition& game,
                          const std::vector<VectorXd>& states,
                          const std::vector<VectorXd>& controls) {
  const JointLayout layout = game.layout();
  // The header uses the widest model's column set; narrower agents leave
  // trailing columns empty. All built-in scenarios are homogeneous.
  int widest = 0;
  for (int i = 1; i < game.num_agents(); ++i) {
    if (game.agents[i].model.state_dim >
        game.agents[widest].model.state_dim) {
      widest = i;
    }
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,agent";
  for (const auto& c : state_column_names(game.agents[widest].model.kind)) {
    out << ',' << c;
  }
  for (const auto& c : input_column_names(game.agents[widest].model.kind)) {
    out << ',' << c;
  }
  out << '\n';

  const int max_n = game.agents[widest].model.state_dim;
  const int max_m = game.agents[widest].model.input_dim;
  for (std::size_t t = 0; t < states.size(); ++t) {
    for (int i = 0; i < game.num_agents(); ++i) {
      out << fmt(static_cast<double>(t) * game.dt) << ',' << i;
      const auto xi = states[t].segment(layout.state_offset[i],
                                        layout.state_dim[i]);
      for (int k = 0; k < max_n; ++k) {
        out << ',';
        if (k < xi.size()) out << fmt(xi[k]);
      }
      for (int k = 0; k < max_m; ++k) {
        out << ',';
        if (t < controls.size() && k < layout.input_dim[i]) {
          out << fmt(controls[t][layout.input_offset[i] + k]);
        }
      }
      out << '\n';
    }
  }
}

TrajectoryTable read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "t" || header[1] != "agent") {
    throw std::runtime_error("malformed CSV header in " + path);
  }
  // Infer the state/input split from the known model column sets.
  int state_cols = 0;
  if (header.size() == 2 + 4 + 2) {
    state_cols = 4;
  } else if (header.size() == 2 + 6 + 6) {
    state_cols = 6;
  } else {
    throw std::runtime_error("unrecognized CSV schema in " + path);
  }
  const int input_cols = static_cast<int>(header.size()) - 2 - state_cols;

  struct Row {
    double t;
    int agent;
    VectorXd x;
    VectorXd u;
    bool has_u;
  };
  std::vector<Row> rows;
  int max_agent = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (static_cast<int>(f.size()) != static_cast<int>(header.size())) {
      throw std::runtime_error("malformed CSV row in " + path);
    }
    Row row;
    row.t = std::stod(f[0]);
    row.agent = std::stoi(f[1]);
    max_agent = std::max(max_agent, row.agent);
    int nx = 0;
    for (int k = 0; k < state_cols; ++k) {
      if (!f[2 + k].empty()) ++nx;
    }
    row.x.resize(nx);
    for (int k = 0; k < nx; ++k) row.x[k] = std::stod(f[2 + k]);
    int nu = 0;
    for (int k = 0; k < input_cols; ++k) {
      if (!f[2 + state_cols + k].empty()) ++nu;
    }
    row.has_u = nu > 0;
    row.u.resize(nu);
    for (int k = 0; k < nu; ++k) row.u[k] = std::stod(f[2 + state_cols + k]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("CSV has no data rows: " + path);

  TrajectoryTable table;
  table.num_agents = max_agent + 1;
  if (static_cast<int>(rows.size()) % table.num_agents != 0) {
    throw std::runtime_error("CSV rows not aligned to agent count: " + path);
  }
  const int steps = static_cast<int>(rows.size()) / table.num_agents;
  table.states.resize(steps, std::vector<VectorXd>(table.num_agents));
  table.controls.resize(steps - 1, std::vector<VectorXd>(table.num_agents));
  table.state_dims.resize(table.num_agents, 0);
  table.input_dims.resize(table.num_agents, 0);
  for (int t = 0; t < steps; ++t) {
    for (int i = 0; i < table.num_agents; ++i) {
      const Row& row = rows[t * table.num_agents + i];
      if (row.agent != i) {
        throw std::runtime_error("CSV agent ordering is inconsistent: " + path);
      }
      table.states[t][i] = row.x;
      table.state_dims[i] = static_cast<int>(row.x.size());
      if (t < steps - 1) {
        if (!row.has_u) {
          throw std::runtime_error("CSV missing controls before final row");
        }
        table.controls[t][i] = row.u;
        table.input_dims[i] = static_cast<int>(row.u.size());
      }
    }
  }
  return table;
}

std::vector<VectorXd> TrajectoryTable::joint_states() const {
  std::vector<VectorXd> out;
  for (const auto& row : states) {
    int total = 0;
    for (const auto& x : row) total += static_cast<int>(x.size());
    VectorXd v(total);
    int off = 0;
    for (const auto& x : row) {
      v.segment(off, x.size()) = x;
      off += static_cast<int>(x.size());
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<VectorXd> TrajectoryTable::joint_controls() const {
  std::vector<VectorXd> out;
  for (const auto& row : controls) {
    int total = 0;
    for (const auto& u : row) total += static_cast<int>(u.size());
    VectorXd v(total);
    int off = 0;
    for (const auto& u : row) {
      v.segment(off, u.size()) = u;
      off += static_cast<int>(u.size());
    }
    out.push_back(std::move(v));
  }
  return out;
}

nlohmann::json report_json(const SolveReport& report) {
  nlohmann::json j;
  j["iterations"] = report.iterations;
  j["cost_trace"] = report.cost_trace;
  j["converged"] = report.converged;
  j["termination"] = to_string(report.reason);
  j["wall_time_s"] = report.wall_time_s;
  j["final_regularization"] = report.final_regularization;
  return j;
}

nlohmann::json report_json(const NashGapReport& report) {
  nlohmann::json j;
  j["max_relative_gap"] = report.max_relative_gap;
  j["agents"] = nlohmann::json::array();
  for (const auto& g : report.gaps) {
    nlohmann::json a;
    a["agent"] = g.agent;
    a["equilibrium_cost"] = g.equilibrium_cost;
    a["best_response_cost"] = g.best_response_cost;
    a["absolute_gap"] = g.absolute_gap;
    a["relative_gap"] = g.relative_gap;
    a["solver_converged"] = g.solver_converged;
    j["agents"].push_back(std::move(a));
  }
  return j;
}

nlohmann::json report_json(const MpcLog& log, bool keep_plans) {
  nlohmann::json j;
  j["steps"] = log.executed_controls.size();
  j["any_degraded"] = log.any_degraded;
  j["reached_goals"] = log.reached_goals;
  j["min_distance_trace"] = log.min_distance_trace;
  j["goal_error_trace"] = log.goal_error_trace;
  j["replans"] = nlohmann::json::array();
  for (const auto& r : log.replans) {
    nlohmann::json rep;
    rep["report"] = report_json(r.report);
    rep["degraded"] = r.degraded;
    if (keep_plans) {
      nlohmann::json plan = nlohmann::json::array();
      for (const auto& x : r.plan.states) {
        plan.push_back(std::vector<double>(x.data(), x.data() + x.size()));
      }
      rep["planned_states"] = std::move(plan);
    }
    j["replans"].push_back(std::move(rep));
  }
  return j;
}

namespace {

struct Bounds {
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -std::numeric_limits<double>::infinity();
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  void add(double x, double y) {
    xmin = std::min(xmin, x);
    xmax = std::max(xmax, x);
    ymin = std::min(ymin, y);
    ymax = std::max(ymax, y);
  }
  void pad(double frac) {
    const double dx = std::max(xmax - xmin, 1e-6) * frac;
    const double dy = std::max(ymax - ymin, 1e-6) * frac;
    xmin -= dx;
    xmax += dx;
    ymin -= dy;
    ymax += dy;
  }
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

std::string render_paths_svg(const TrajectoryTable& table, double dt,
                             const std::vector<VectorXd>* goal_positions) {
  const int n_agents = table.num_agents;
  const bool has_altitude =
      std::any_of(table.state_dims.begin(), table.state_dims.end(),
                  [](int d) { return d >= 6; });
  const double w = 560.0, h = 520.0, margin = 40.0;
  const double panel_h = has_altitude ? 200.0 : 0.0;

  Bounds b;
  for (const auto& row : table.states) {
    for (const auto& x : row) b.add(x[0], x[1]);
  }
  if (goal_positions) {
    for (const auto& g : *goal_positions) b.add(g[0], g[1]);
  }
  b.pad(0.08);

  auto sx = [&](double x) {
    return margin + (x - b.xmin) / (b.xmax - b.xmin) * (w - 2 * margin);
  };
  auto sy = [&](double y) {
    return h - margin - (y - b.ymin) / (b.ymax - b.ymin) * (h - 2 * margin);
  };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << (h + panel_h) << "\" viewBox=\"0 0 " << w << ' '
      << (h + panel_h) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (int i = 0; i < n_agents; ++i) {
    const char* color = kPalette[i % 8];
    svg << "<polyline class=\"path\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& row : table.states) {
      svg << sx(row[i][0]) << ',' << sy(row[i][1]) << ' ';
    }
    svg << "\"/>\n";
    // Start circle.
    svg << "<circle cx=\"" << sx(table.states.front()[i][0]) << "\" cy=\""
        << sy(table.states.front()[i][1]) << "\" r=\"5\" fill=\"none\" "
        << "stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    // Goal cross.
    double gx, gy;
    if (goal_positions && i < static_cast<int>(goal_positions->size())) {
      gx = (*goal_positions)[i][0];
      gy = (*goal_positions)[i][1];
    } else {
      gx = table.states.back()[i][0];
      gy = table.states.back()[i][1];
    }
    const double cx = sx(gx), cy = sy(gy), r = 5.0;
    svg << "<path d=\"M" << (cx - r) << ' ' << (cy - r) << " L" << (cx + r)
        << ' ' << (cy + r) << " M" << (cx - r) << ' ' << (cy + r) << " L"
        << (cx + r) << ' ' << (cy - r) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
  }

  if (has_altitude) {
    Bounds zb;
    const double t_end = dt * static_cast<double>(table.states.size() - 1);
    for (std::size_t t = 0; t < table.states.size(); ++t) {
      for (int i = 0; i < n_agents; ++i) {
        if (table.state_dims[i] >= 6) {
          zb.add(dt * static_cast<double>(t), table.states[t][i][2]);
        }
      }
    }
    zb.add(t_end, zb.ymin);
    zb.pad(0.08);
    auto px = [&](double t) {
      return margin + (t - zb.xmin) / (zb.xmax - zb.xmin) * (w - 2 * margin);
    };
    auto pz = [&](double z) {
      return h + panel_h - margin / 2 -
             (z - zb.ymin) / (zb.ymax - zb.ymin) * (panel_h - margin);
    };
    for (int i = 0; i < n_agents; ++i) {
      if (table.state_dims[i] < 6) continue;
      svg << "<polyline class=\"altitude\" fill=\"none\" stroke=\""
          << kPalette[i % 8] << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t t = 0; t < table.states.size(); ++t) {
        svg << px(dt * static_cast<double>(t)) << ',' << pz(table.states[t][i][2])
            << ' ';
      }
      svg << "\"/>\n";
    }
    svg << "<text x=\"" << margin << "\" y=\"" << (h + 14)
        << "\" font-size=\"12\">altitude vs time</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string render_histogram_svg(const std::vector<double>& values,
                                 const std::string& x_label, int bins) {
  const double w = 560.0, h = 360.0, margin = 45.0;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << ' ' << h
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!values.empty() && bins > 0) {
    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    const double width = std::max(hi - lo, 1e-9);
    std::vector<int> counts(bins, 0);
    for (double v : values) {
      int idx = static_cast<int>((v - lo) / width * bins);
      idx = std::clamp(idx, 0, bins - 1);
      counts[idx]++;
    }
    const int peak = *std::max_element(counts.begin(), counts.end());
    const double bar_w = (w - 2 * margin) / bins;
    for (int i = 0; i < bins; ++i) {
      const double bh = (h - 2 * margin) * counts[i] / std::max(peak, 1);
      svg << "<rect x=\"" << (margin + i * bar_w) << "\" y=\""
          << (h - margin - bh) << "\" width=\"" << (bar_w * 0.9)
          << "\" height=\"" << bh << "\" fill=\"#1f77b4\"/>\n";
    }
  }
  svg << "<text x=\"" << (w / 2 - 40) << "\" y=\"" << (h - 10)
      << "\" font-size=\"12\">" << x_label << "</text>\n</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace pilqr
