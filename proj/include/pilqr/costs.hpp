#pragma once

#include <vector>

#include "pilqr/types.hpp"

namespace pilqr {

struct GameDefinition;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Quadratic state/input tracking cost. Diagonal weights only; entries of
/// q_diag and qt_diag must be >= 0 and entries of r_diag > 0. State indices
/// listed in angle_indices have their deviation wrapped to (-pi, pi].
struct TrackingCost {
  VectorXd q_diag;
  VectorXd r_diag;
  VectorXd qt_diag;  // terminal weights, defaults to q_diag
  VectorXd x_ref;
  VectorXd u_ref;  // defaults to zero
  std::vector<int> angle_indices;

  void validate() const;
};

/// C1 hinge collision penalty: beta * (d - d_prox)^2 for d < d_prox, else 0,
/// where d is the Euclidean distance between the two agents' position
/// sub-vectors.
struct CollisionCost {
  double d_prox = 0.0;
  double beta = 1.0;
  std::vector<int> position_indices_i;
  std::vector<int> position_indices_j;
};

double tracking_running(const TrackingCost& cost, const VectorXd& x,
                        const VectorXd& u);
double tracking_terminal(const TrackingCost& cost, const VectorXd& x_T);
double collision_pair(const CollisionCost& cost, const VectorXd& x_i,
                      const VectorXd& x_j);

/// Gradient and Hessian of the hinge cost with respect to the position
/// difference delta = pos_i - pos_j. Zero outside the hinge. When project_psd
/// is set the Hessian has its negative eigenvalues clamped to zero.
void collision_delta_expansion(const CollisionCost& cost, const VectorXd& delta,
                               VectorXd& grad, MatrixXd& hess,
                               bool project_psd);

/// Second-order expansion of one stage cost (gradients and Hessians around a
/// nominal point). l_uu must be positive definite after regularization.
struct StageExpansion {
  VectorXd lx, lu;
  MatrixXd lxx, luu, lux;

  // setZero resizes only when the dimensions change, so an expansion that is
  // recomputed every solver iteration reuses its storage.
  void set_zero(int n, int m) {
    lx.setZero(n);
    lu.setZero(m);
    lxx.setZero(n, n);
    luu.setZero(m, m);
    lux.setZero(m, n);
  }
};

struct QuadraticExpansion {
  std::vector<StageExpansion> stages;
  VectorXd terminal_grad;
  MatrixXd terminal_hess;
};

// Potential function of the game: sum of all tracking costs
// plus each unordered pairwise coupling counted once. Requires a
// symmetry-validated game.
double potential_running(const GameDefinition& game, const JointState& x,
                         const JointControl& u);
double potential_terminal(const GameDefinition& game, const JointState& x_T);

/// Analytic expansion of potential_running at one knot. Collision Hessians
/// are PSD-projected unless project_psd is false (the raw Hessian is used by
/// the finite-difference checks).
void potential_stage_expansion(const GameDefinition& game, const JointState& x,
                               const JointControl& u, StageExpansion& out,
                               bool project_psd = true);
void potential_terminal_expansion(const GameDefinition& game,
                                  const JointState& x_T, VectorXd& grad,
                                  MatrixXd& hess);

struct NominalTrajectory;  // defined in ilqr.hpp

QuadraticExpansion quadraticize(const GameDefinition& game,
                                const NominalTrajectory& trajectory);

}  // namespace pilqr
