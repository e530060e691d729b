#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pilqr/costs.hpp"
#include "pilqr/types.hpp"

namespace pilqr {

/// Discrete-time optimal control problem as seen by the solver. Stage costs
/// are already scaled to the discrete objective (running cost times dt).
class Ocp {
 public:
  virtual ~Ocp() = default;

  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual int horizon() const = 0;

  virtual VectorXd step(int t, const VectorXd& x, const VectorXd& u) const = 0;
  virtual void linearize(int t, const VectorXd& x, const VectorXd& u,
                         MatrixXd& A, MatrixXd& B) const = 0;
  virtual double stage_cost(int t, const VectorXd& x,
                            const VectorXd& u) const = 0;
  virtual double terminal_cost(const VectorXd& x) const = 0;
  virtual void stage_expansion(int t, const VectorXd& x, const VectorXd& u,
                               StageExpansion& out) const = 0;
  virtual void terminal_expansion(const VectorXd& x, VectorXd& grad,
                                  MatrixXd& hess) const = 0;
};

struct SolverConfig {
  int max_iterations = 100;
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  int line_search_steps = 11;  // alpha = 1, 1/2, ..., 2^-10
  double reg_init = 0.0;
  double reg_floor = 1e-6;  // first nonzero value when growing from zero
  double reg_growth = 10.0;
  double reg_shrink = 0.5;
  double reg_max = 1e8;
};

/// Dynamically consistent state/control sequence with its discrete cost.
struct NominalTrajectory {
  std::vector<VectorXd> states;    // size horizon + 1
  std::vector<VectorXd> controls;  // size horizon
  std::vector<double> stage_costs;
  double total_cost = 0.0;

  int horizon() const { return static_cast<int>(controls.size()); }
};

struct FeedbackPolicy {
  std::vector<VectorXd> k;  // feedforward
  std::vector<MatrixXd> K;  // feedback gains
};

enum class TerminationReason { Tolerance, MaxIterations, LineSearchFailure };

std::string to_string(TerminationReason reason);

struct SolveReport {
  int iterations = 0;  // accepted iterations
  std::vector<double> cost_trace;  // initial cost plus each accepted cost
  bool converged = false;
  TerminationReason reason = TerminationReason::MaxIterations;
  double wall_time_s = 0.0;
  double final_regularization = 0.0;
};

struct SolveResult {
  std::vector<VectorXd> controls;
  FeedbackPolicy policy;
  SolveReport report;
  NominalTrajectory trajectory;
};

/// Forward-simulates a control sequence, accumulating stage and terminal
/// costs. Throws std::runtime_error on a non-finite state.
NominalTrajectory rollout(const Ocp& ocp, const std::vector<VectorXd>& controls,
                          const VectorXd& x0);

struct BackwardPassResult {
  FeedbackPolicy policy;
  double dv1 = 0.0;  // sum k' Qu
  double dv2 = 0.0;  // 1/2 sum k' Quu k
  bool ok = false;
};

/// Riccati/DDP recursion on the LQ approximation with lambda added to the
/// control Hessian before inversion. ok is false when the regularized
/// control Hessian fails its Cholesky factorization.
BackwardPassResult backward_pass(const std::vector<StageExpansion>& stages,
                                 const std::vector<MatrixXd>& A,
                                 const std::vector<MatrixXd>& B,
                                 const VectorXd& terminal_grad,
                                 const MatrixXd& terminal_hess, double lambda);

/// Simulates u_t = u_bar_t + alpha*k_t + K_t(x_t - x_bar_t). Returns nullopt
/// when the rollout diverges.
std::optional<NominalTrajectory> forward_pass(const Ocp& ocp,
                                              const NominalTrajectory& ref,
                                              const FeedbackPolicy& policy,
                                              double alpha);

/// Iterates linearize -> quadraticize -> backward pass -> line-searched
/// forward pass until the accepted cost decrease drops below tolerance.
/// Candidates are accepted only on strict cost decrease, so the accepted cost
/// sequence is non-increasing by construction. initial_controls defaults to
/// the zero sequence.
SolveResult solve(const Ocp& ocp, const VectorXd& x0,
                  const std::vector<VectorXd>* initial_controls,
                  const SolverConfig& config);

}  // namespace pilqr
