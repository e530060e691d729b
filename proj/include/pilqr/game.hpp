#pragma once

#include <limits>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pilqr/costs.hpp"
#include "pilqr/dynamics.hpp"
#include "pilqr/ilqr.hpp"
#include "pilqr/types.hpp"

namespace pilqr {

struct AgentSpec {
  AgentModel model;
  TrackingCost tracking;
};

struct SymmetryReport {
  bool ok = false;
  std::vector<std::pair<int, int>> offending_pairs;
  std::string message;
};

/// N agents with decoupled dynamics, per-agent tracking costs, and a pairwise
/// coupling table recorded in both directions. The potential construction is
/// only available once validate() has confirmed symmetric couplings.
struct GameDefinition {
  std::vector<AgentSpec> agents;
  std::map<std::pair<int, int>, CollisionCost> couplings;  // every ordered pair
  int horizon = 0;  // steps
  double dt = 0.0;

  int num_agents() const { return static_cast<int>(agents.size()); }
  std::vector<AgentModel> models() const;
  JointLayout layout() const;

  JointState joint_state(VectorXd v) const {
    return make_joint_state(layout(), std::move(v));
  }
  JointControl joint_control(VectorXd v) const {
    return make_joint_control(layout(), std::move(v));
  }

  /// Runs validate_symmetry and latches the result.
  const SymmetryReport& validate();
  bool is_validated() const { return validated_; }

 private:
  bool validated_ = false;
  SymmetryReport report_;
};

/// Structural check of the symmetry hypothesis behind the potential
/// construction: for every pair, the two directed couplings carry identical
/// d_prox, beta, and position-index semantics. Failures are reported, not
/// thrown.
SymmetryReport validate_symmetry(const GameDefinition& game);

/// Sampling fallback for coupling families where parameter equality is not
/// available: compares C_ij and C_ji on random state pairs, exact equality.
SymmetryReport symmetry_by_sampling(const GameDefinition& game, int samples,
                                    uint64_t seed);

class GameError : public std::runtime_error {
 public:
  GameError(const std::string& what, SymmetryReport report)
      : std::runtime_error(what), report(std::move(report)) {}
  SymmetryReport report;
};

/// The single OCP of the potential construction: running cost is the
/// potential p, terminal cost is s_bar, dynamics are the decoupled joint
/// step. Stage costs carry the dt factor of the discrete objective.
class PotentialOcp : public Ocp {
 public:
  explicit PotentialOcp(GameDefinition game);

  int state_dim() const override { return layout_.total_state(); }
  int input_dim() const override { return layout_.total_input(); }
  int horizon() const override { return game_.horizon; }
  double dt() const { return game_.dt; }
  const GameDefinition& game() const { return game_; }

  VectorXd step(int t, const VectorXd& x, const VectorXd& u) const override;
  void linearize(int t, const VectorXd& x, const VectorXd& u, MatrixXd& A,
                 MatrixXd& B) const override;
  double stage_cost(int t, const VectorXd& x, const VectorXd& u) const override;
  double terminal_cost(const VectorXd& x) const override;
  void stage_expansion(int t, const VectorXd& x, const VectorXd& u,
                       StageExpansion& out) const override;
  void terminal_expansion(const VectorXd& x, VectorXd& grad,
                          MatrixXd& hess) const override;

 private:
  GameDefinition game_;
  JointLayout layout_;
  std::vector<AgentModel> models_;
  // Scratch joint views reused across the per-stage calls above; instances
  // are therefore not safe for concurrent use (each solve owns its OCP).
  mutable JointState xs_;
  mutable JointControl us_;
};

/// Throws GameError (with the symmetry report attached) for asymmetric games.
PotentialOcp build_potential_ocp(GameDefinition game);

/// Agent i's discrete cost along a joint trajectory:
/// dt * sum_t [tracking_i + sum_{j != i} collision_ij] + terminal_i.
double agent_cost(const GameDefinition& game, int i,
                  const NominalTrajectory& trajectory);

struct BestResponseResult {
  std::vector<VectorXd> controls;  // agent i's optimized open-loop controls
  double cost = 0.0;               // achieved J_i
  SolveReport report;
};

/// Solves agent i's single-agent OCP with all other agents' trajectories
/// frozen at the rollout of their fixed controls (valid because dynamics are
/// decoupled). Never evaluates the potential, so it is an independent
/// verifier of the potential construction. initial_controls, when given,
/// warm-starts the solve.
BestResponseResult best_response(const GameDefinition& game, int i,
                                 const std::vector<VectorXd>& joint_controls,
                                 const VectorXd& x0,
                                 const SolverConfig& config,
                                 const std::vector<VectorXd>* initial_controls =
                                     nullptr);

struct NashGapReport {
  struct AgentGap {
    int agent = 0;
    double equilibrium_cost = 0.0;    // J_i(u*)
    double best_response_cost = 0.0;  // J_i(BR_i, u*_{-i})
    double absolute_gap = 0.0;
    double relative_gap = 0.0;
    bool solver_converged = true;
  };
  std::vector<AgentGap> gaps;
  double max_relative_gap = -std::numeric_limits<double>::infinity();
};

/// Best-response Nash verification: gap_i = J_i(u*) - J_i(BR_i, u*_{-i}).
/// A Nash point has every gap <= 0 up to solver tolerance. relative_gap uses
/// max(|J_i(u*)|, 1e-9) as denominator.
NashGapReport nash_gap(const GameDefinition& game,
                       const std::vector<VectorXd>& joint_controls,
                       const VectorXd& x0, const SolverConfig& config);

}  // namespace pilqr
