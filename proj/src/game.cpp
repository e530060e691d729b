#include "pilqr/game.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pilqr/rng.hpp"

namespace pilqr {

std::vector<AgentModel> GameDefinition::models() const {
  std::vector<AgentModel> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.model);
  return out;
}

JointLayout GameDefinition::layout() const { return layout_of(models()); }

const SymmetryReport& GameDefinition::validate() {
  report_ = validate_symmetry(*this);
  validated_ = report_.ok;
  return report_;
}

SymmetryReport validate_symmetry(const GameDefinition& game) {
  SymmetryReport report;
  report.ok = true;
  const int n = game.num_agents();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto ij = game.couplings.find({i, j});
      const auto ji = game.couplings.find({j, i});
      if (ij == game.couplings.end() || ji == game.couplings.end()) {
        report.ok = false;
        report.offending_pairs.emplace_back(i, j);
        continue;
      }
      const CollisionCost& a = ij->second;
      const CollisionCost& b = ji->second;
      const bool same = a.d_prox == b.d_prox && a.beta == b.beta &&
                        a.position_indices_i == b.position_indices_j &&
                        a.position_indices_j == b.position_indices_i;
      if (!same) {
        report.ok = false;
        report.offending_pairs.emplace_back(i, j);
      }
    }
  }
  if (!report.ok) {
    std::ostringstream msg;
    msg << "asymmetric couplings for pairs:";
    for (const auto& [i, j] : report.offending_pairs) {
      msg << " (" << i << "," << j << ")";
    }
    report.message = msg.str();
  }
  return report;
}

SymmetryReport symmetry_by_sampling(const GameDefinition& game, int samples,
                                    uint64_t seed) {
  SymmetryReport report;
  report.ok = true;
  SplitMix64 rng(seed);
  const int n = game.num_agents();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto ij = game.couplings.find({i, j});
      const auto ji = game.couplings.find({j, i});
      if (ij == game.couplings.end() || ji == game.couplings.end()) {
        report.ok = false;
        report.offending_pairs.emplace_back(i, j);
        continue;
      }
      bool same = true;
      for (int s = 0; s < samples && same; ++s) {
        VectorXd xi(game.agents[i].model.state_dim);
        VectorXd xj(game.agents[j].model.state_dim);
        for (int k = 0; k < xi.size(); ++k) xi[k] = rng.uniform(-10.0, 10.0);
        for (int k = 0; k < xj.size(); ++k) xj[k] = rng.uniform(-10.0, 10.0);
        same = collision_pair(ij->second, xi, xj) ==
               collision_pair(ji->second, xj, xi);
      }
      if (!same) {
        report.ok = false;
        report.offending_pairs.emplace_back(i, j);
      }
    }
  }
  if (!report.ok) report.message = "sampling found asymmetric couplings";
  return report;
}

PotentialOcp::PotentialOcp(GameDefinition game) : game_(std::move(game)) {
  // Always re-check: the latch may be stale if couplings were edited after
  // an earlier validate().
  const SymmetryReport& report = game_.validate();
  if (!report.ok) {
    throw GameError("PotentialOcp: " + report.message, report);
  }
  layout_ = game_.layout();
  models_ = game_.models();
  xs_.offsets = layout_.state_offset;
  us_.offsets = layout_.input_offset;
}

VectorXd PotentialOcp::step(int /*t*/, const VectorXd& x,
                            const VectorXd& u) const {
  VectorXd next(layout_.total_state());
  for (int i = 0; i < game_.num_agents(); ++i) {
    const int so = layout_.state_offset[i];
    const int uo = layout_.input_offset[i];
    next.segment(so, layout_.state_dim[i]) =
        pilqr::step(models_[i], x.segment(so, layout_.state_dim[i]),
                    u.segment(uo, layout_.input_dim[i]), game_.dt);
  }
  return next;
}

void PotentialOcp::linearize(int /*t*/, const VectorXd& x, const VectorXd& u,
                             MatrixXd& A, MatrixXd& B) const {
  const int n = layout_.total_state();
  const int m = layout_.total_input();
  A = MatrixXd::Zero(n, n);
  B = MatrixXd::Zero(n, m);
  MatrixXd Ai, Bi;
  for (int i = 0; i < game_.num_agents(); ++i) {
    const int so = layout_.state_offset[i];
    const int uo = layout_.input_offset[i];
    linearize_step(models_[i], x.segment(so, layout_.state_dim[i]),
                   u.segment(uo, layout_.input_dim[i]), game_.dt, Ai, Bi);
    A.block(so, so, Ai.rows(), Ai.cols()) = Ai;
    B.block(so, uo, Bi.rows(), Bi.cols()) = Bi;
  }
}

double PotentialOcp::stage_cost(int /*t*/, const VectorXd& x,
                                const VectorXd& u) const {
  xs_.values = x;
  us_.values = u;
  return game_.dt * potential_running(game_, xs_, us_);
}

double PotentialOcp::terminal_cost(const VectorXd& x) const {
  return potential_terminal(game_, make_joint_state(layout_, x));
}

void PotentialOcp::stage_expansion(int /*t*/, const VectorXd& x,
                                   const VectorXd& u,
                                   StageExpansion& out) const {
  xs_.values = x;
  us_.values = u;
  potential_stage_expansion(game_, xs_, us_, out);
  out.lx *= game_.dt;
  out.lu *= game_.dt;
  out.lxx *= game_.dt;
  out.luu *= game_.dt;
  out.lux *= game_.dt;
}

void PotentialOcp::terminal_expansion(const VectorXd& x, VectorXd& grad,
                                      MatrixXd& hess) const {
  potential_terminal_expansion(game_, make_joint_state(layout_, x), grad, hess);
}

PotentialOcp build_potential_ocp(GameDefinition game) {
  return PotentialOcp(std::move(game));
}

double agent_cost(const GameDefinition& game, int i,
                  const NominalTrajectory& trajectory) {
  const JointLayout layout = game.layout();
  const int T = trajectory.horizon();
  double running = 0.0;
  for (int t = 0; t < T; ++t) {
    const JointState x = make_joint_state(layout, trajectory.states[t]);
    const JointControl u = make_joint_control(layout, trajectory.controls[t]);
    running += tracking_running(game.agents[i].tracking, x.agent(i), u.agent(i));
    for (int j = 0; j < game.num_agents(); ++j) {
      if (j == i) continue;
      const auto key = std::make_pair(std::min(i, j), std::max(i, j));
      const CollisionCost& cc = game.couplings.at(key);
      running += (i < j) ? collision_pair(cc, x.agent(i), x.agent(j))
                         : collision_pair(cc, x.agent(j), x.agent(i));
    }
  }
  const JointState xT = make_joint_state(layout, trajectory.states.back());
  return game.dt * running +
         tracking_terminal(game.agents[i].tracking, xT.agent(i));
}

namespace {

// Single-agent OCP for agent i with every other agent frozen at the rollout
// of its fixed controls. Evaluates the agent's own cost J_i directly; the
// potential is never touched.
class BestResponseOcp : public Ocp {
 public:
  BestResponseOcp(const GameDefinition& game, int agent,
                  std::vector<std::vector<VectorXd>> frozen_states)
      : game_(game), agent_(agent), frozen_states_(std::move(frozen_states)) {}

  int state_dim() const override { return game_.agents[agent_].model.state_dim; }
  int input_dim() const override { return game_.agents[agent_].model.input_dim; }
  int horizon() const override { return game_.horizon; }

  VectorXd step(int /*t*/, const VectorXd& x, const VectorXd& u) const override {
    return pilqr::step(game_.agents[agent_].model, x, u, game_.dt);
  }

  void linearize(int /*t*/, const VectorXd& x, const VectorXd& u, MatrixXd& A,
                 MatrixXd& B) const override {
    linearize_step(game_.agents[agent_].model, x, u, game_.dt, A, B);
  }

  double stage_cost(int t, const VectorXd& x, const VectorXd& u) const override {
    double c = tracking_running(game_.agents[agent_].tracking, x, u);
    for (int j = 0; j < game_.num_agents(); ++j) {
      if (j == agent_) continue;
      c += coupling_value(t, j, x);
    }
    return game_.dt * c;
  }

  double terminal_cost(const VectorXd& x) const override {
    return tracking_terminal(game_.agents[agent_].tracking, x);
  }

  void stage_expansion(int t, const VectorXd& x, const VectorXd& u,
                       StageExpansion& out) const override {
    const TrackingCost& tc = game_.agents[agent_].tracking;
    out.set_zero(state_dim(), input_dim());
    VectorXd dx = x - tc.x_ref;
    for (int idx : tc.angle_indices) dx[idx] = wrap_angle(dx[idx]);
    VectorXd du = u;
    if (tc.u_ref.size() > 0) du -= tc.u_ref;
    out.lx = 2.0 * tc.q_diag.cwiseProduct(dx);
    out.lu = 2.0 * tc.r_diag.cwiseProduct(du);
    out.lxx.diagonal() = 2.0 * tc.q_diag;
    out.luu.diagonal() = 2.0 * tc.r_diag;

    VectorXd g;
    MatrixXd h;
    for (int j = 0; j < game_.num_agents(); ++j) {
      if (j == agent_) continue;
      const CollisionCost cc = oriented_coupling(j);
      VectorXd delta(cc.position_indices_i.size());
      const VectorXd& xj = frozen_states_[j][t];
      for (std::size_t a = 0; a < cc.position_indices_i.size(); ++a) {
        delta[a] = x[cc.position_indices_i[a]] - xj[cc.position_indices_j[a]];
      }
      collision_delta_expansion(cc, delta, g, h, /*project_psd=*/true);
      for (std::size_t a = 0; a < cc.position_indices_i.size(); ++a) {
        out.lx[cc.position_indices_i[a]] += g[a];
        for (std::size_t b = 0; b < cc.position_indices_i.size(); ++b) {
          out.lxx(cc.position_indices_i[a], cc.position_indices_i[b]) += h(a, b);
        }
      }
    }
    out.lx *= game_.dt;
    out.lu *= game_.dt;
    out.lxx *= game_.dt;
    out.luu *= game_.dt;
  }

  void terminal_expansion(const VectorXd& x, VectorXd& grad,
                          MatrixXd& hess) const override {
    const TrackingCost& tc = game_.agents[agent_].tracking;
    VectorXd dx = x - tc.x_ref;
    for (int idx : tc.angle_indices) dx[idx] = wrap_angle(dx[idx]);
    grad = 2.0 * tc.qt_diag.cwiseProduct(dx);
    hess = MatrixXd::Zero(x.size(), x.size());
    hess.diagonal() = 2.0 * tc.qt_diag;
  }

 private:
  CollisionCost oriented_coupling(int j) const {
    const auto key =
        std::make_pair(std::min(agent_, j), std::max(agent_, j));
    CollisionCost cc = game_.couplings.at(key);
    if (agent_ > j) std::swap(cc.position_indices_i, cc.position_indices_j);
    return cc;
  }

  double coupling_value(int t, int j, const VectorXd& x) const {
    const CollisionCost cc = oriented_coupling(j);
    VectorXd delta(cc.position_indices_i.size());
    const VectorXd& xj = frozen_states_[j][t];
    for (std::size_t a = 0; a < cc.position_indices_i.size(); ++a) {
      delta[a] = x[cc.position_indices_i[a]] - xj[cc.position_indices_j[a]];
    }
    const double d = delta.norm();
    if (d >= cc.d_prox) return 0.0;
    return cc.beta * (d - cc.d_prox) * (d - cc.d_prox);
  }

  const GameDefinition& game_;
  int agent_;
  std::vector<std::vector<VectorXd>> frozen_states_;  // [agent][t]
};

// Per-agent open-loop rollouts under the decoupled dynamics.
std::vector<std::vector<VectorXd>> per_agent_rollouts(
    const GameDefinition& game, const std::vector<VectorXd>& joint_controls,
    const VectorXd& x0) {
  const JointLayout layout = game.layout();
  std::vector<std::vector<VectorXd>> states(game.num_agents());
  for (int i = 0; i < game.num_agents(); ++i) {
    VectorXd xi = x0.segment(layout.state_offset[i], layout.state_dim[i]);
    states[i].push_back(xi);
    for (int t = 0; t < game.horizon; ++t) {
      xi = step(game.agents[i].model, xi,
                joint_controls[t].segment(layout.input_offset[i],
                                          layout.input_dim[i]),
                game.dt);
      states[i].push_back(xi);
    }
  }
  return states;
}

}  // namespace

BestResponseResult best_response(const GameDefinition& game, int i,
                                 const std::vector<VectorXd>& joint_controls,
                                 const VectorXd& x0, const SolverConfig& config,
                                 const std::vector<VectorXd>* initial_controls) {
  if (static_cast<int>(joint_controls.size()) != game.horizon) {
    throw std::invalid_argument("best_response: control horizon mismatch");
  }
  const JointLayout layout = game.layout();
  BestResponseOcp ocp(game, i, per_agent_rollouts(game, joint_controls, x0));
  const VectorXd xi0 = x0.segment(layout.state_offset[i], layout.state_dim[i]);

  std::vector<VectorXd> init;
  const std::vector<VectorXd>* init_ptr = initial_controls;
  if (init_ptr == nullptr) {
    // Default to the agent's slice of the supplied joint controls.
    init.reserve(game.horizon);
    for (const auto& u : joint_controls) {
      init.push_back(u.segment(layout.input_offset[i], layout.input_dim[i]));
    }
    init_ptr = &init;
  }

  SolveResult sr = solve(ocp, xi0, init_ptr, config);
  BestResponseResult out;
  out.controls = std::move(sr.controls);
  out.cost = sr.trajectory.total_cost;
  out.report = std::move(sr.report);
  return out;
}

NashGapReport nash_gap(const GameDefinition& game,
                       const std::vector<VectorXd>& joint_controls,
                       const VectorXd& x0, const SolverConfig& config) {
  if (!joint_controls.empty() &&
      joint_controls[0].size() != game.layout().total_input()) {
    throw std::invalid_argument("nash_gap: joint control dimension mismatch");
  }
  // Evaluate each J_i(u*) on the joint rollout.
  GameDefinition validated = game;
  if (!validated.is_validated()) validated.validate();
  const std::vector<AgentModel> models = game.models();
  const JointLayout layout = game.layout();
  NominalTrajectory traj;
  traj.states.push_back(x0);
  traj.controls = joint_controls;
  for (int t = 0; t < game.horizon; ++t) {
    traj.states.push_back(joint_step(models,
                                     make_joint_state(layout, traj.states[t]),
                                     make_joint_control(layout, traj.controls[t]),
                                     game.dt)
                              .values);
  }

  NashGapReport report;
  for (int i = 0; i < game.num_agents(); ++i) {
    NashGapReport::AgentGap gap;
    gap.agent = i;
    gap.equilibrium_cost = agent_cost(game, i, traj);
    BestResponseResult br = best_response(game, i, joint_controls, x0, config);
    gap.best_response_cost = br.cost;
    gap.solver_converged = br.report.converged;
    gap.absolute_gap = gap.equilibrium_cost - gap.best_response_cost;
    gap.relative_gap =
        gap.absolute_gap / std::max(std::abs(gap.equilibrium_cost), 1e-9);
    report.max_relative_gap = std::max(report.max_relative_gap, gap.relative_gap);
    report.gaps.push_back(gap);
  }
  return report;
}

}  // namespace pilqr
