#pragma once

#include <string>
#include <vector>

#include "pilqr/types.hpp"

namespace pilqr {

enum class ModelKind { Unicycle4, Quadrotor6 };

/// A per-agent dynamics model. Both built-in models are time-invariant
/// kinematic models; the time argument of derivative() is accepted for
/// interface generality and ignored.
struct AgentModel {
  ModelKind kind;
  int state_dim;
  int input_dim;

  static AgentModel unicycle() { return {ModelKind::Unicycle4, 4, 2}; }
  static AgentModel quadrotor() { return {ModelKind::Quadrotor6, 6, 6}; }
};

std::string to_string(ModelKind kind);

/// Continuous-time state derivative.
///
/// Unicycle4: state [px, py, theta, v], input [omega, a].
/// Quadrotor6: state [px, py, pz, roll, pitch, yaw] (Z-Y-X Euler), input
/// [vbx, vby, vbz, p, q, r] (body translational and angular velocities).
/// Throws std::domain_error when the quadrotor pitch is within 1e-6 of the
/// Euler-rate singularity at +-pi/2.
///
/// These take Eigen::Ref so segments of a joint vector bind without a copy.
VectorXd derivative(const AgentModel& model,
                    const Eigen::Ref<const VectorXd>& x,
                    const Eigen::Ref<const VectorXd>& u, double t = 0.0);

/// Explicit Euler update x + dt * derivative(x, u).
VectorXd step(const AgentModel& model, const Eigen::Ref<const VectorXd>& x,
              const Eigen::Ref<const VectorXd>& u, double dt);

/// Exact Jacobians of the Euler step: A = I + dt*df/dx, B = dt*df/du.
void linearize_step(const AgentModel& model,
                    const Eigen::Ref<const VectorXd>& x,
                    const Eigen::Ref<const VectorXd>& u, double dt, MatrixXd& A,
                    MatrixXd& B);

JointLayout layout_of(const std::vector<AgentModel>& models);

/// Per-agent Euler step applied block-wise; blocks never interact.
JointState joint_step(const std::vector<AgentModel>& models,
                      const JointState& x, const JointControl& u, double dt);

}  // namespace pilqr
