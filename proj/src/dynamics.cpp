#include "pilqr/dynamics.hpp"

#include <cmath>

namespace pilqr {

namespace {

constexpr double kPitchGuard = M_PI / 2.0 - 1e-6;

void check_dims(const AgentModel& model, const Eigen::Ref<const VectorXd>& x,
                const Eigen::Ref<const VectorXd>& u) {
  if (x.size() != model.state_dim || u.size() != model.input_dim) {
    throw std::invalid_argument("dynamics: state/input dimension mismatch");
  }
}

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

Mat3 rot_x(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}

Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}

Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

Mat3 drot_x(double a) {
  Mat3 m;
  m << 0, 0, 0, 0, -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a);
  return m;
}

Mat3 drot_y(double a) {
  Mat3 m;
  m << -std::sin(a), 0, std::cos(a), 0, 0, 0, -std::cos(a), 0, -std::sin(a);
  return m;
}

Mat3 drot_z(double a) {
  Mat3 m;
  m << -std::sin(a), -std::cos(a), 0, std::cos(a), -std::sin(a), 0, 0, 0, 0;
  return m;
}

// Maps body angular rates [p, q, r] to Z-Y-X Euler-angle rates.
Mat3 euler_rate_matrix(double roll, double pitch) {
  const double sr = std::sin(roll), cr = std::cos(roll);
  const double tp = std::tan(pitch), cp = std::cos(pitch);
  Mat3 m;
  m << 1, sr * tp, cr * tp,  //
      0, cr, -sr,            //
      0, sr / cp, cr / cp;
  return m;
}

Mat3 euler_rate_matrix_droll(double roll, double pitch) {
  const double sr = std::sin(roll), cr = std::cos(roll);
  const double tp = std::tan(pitch), cp = std::cos(pitch);
  Mat3 m;
  m << 0, cr * tp, -sr * tp,  //
      0, -sr, -cr,            //
      0, cr / cp, -sr / cp;
  return m;
}

Mat3 euler_rate_matrix_dpitch(double roll, double pitch) {
  const double sr = std::sin(roll), cr = std::cos(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double sec2 = 1.0 / (cp * cp);
  Mat3 m;
  m << 0, sr * sec2, cr * sec2,  //
      0, 0, 0,                   //
      0, sr * sp * sec2, cr * sp * sec2;
  return m;
}

void check_pitch(double pitch) {
  if (std::abs(pitch) >= kPitchGuard) {
    throw std::domain_error("quadrotor6: pitch at Euler-rate singularity");
  }
}

}  // namespace

std::string to_string(ModelKind kind) {
  return kind == ModelKind::Unicycle4 ? "unicycle4" : "quadrotor6";
}

VectorXd derivative(const AgentModel& model,
                    const Eigen::Ref<const VectorXd>& x,
                    const Eigen::Ref<const VectorXd>& u, double /*t*/) {
  check_dims(model, x, u);
  VectorXd dx(model.state_dim);
  switch (model.kind) {
    case ModelKind::Unicycle4: {
      const double theta = x[2], v = x[3];
      dx[0] = v * std::cos(theta);
      dx[1] = v * std::sin(theta);
      dx[2] = u[0];
      dx[3] = u[1];
      break;
    }
    case ModelKind::Quadrotor6: {
      const double roll = x[3], pitch = x[4], yaw = x[5];
      check_pitch(pitch);
      const Mat3 world_from_body = rot_z(yaw) * rot_y(pitch) * rot_x(roll);
      dx.head<3>() = world_from_body * u.head<3>();
      dx.tail<3>() = euler_rate_matrix(roll, pitch) * u.tail<3>();
      break;
    }
  }
  return dx;
}

VectorXd step(const AgentModel& model, const Eigen::Ref<const VectorXd>& x,
              const Eigen::Ref<const VectorXd>& u, double dt) {
  if (dt <= 0.0) {
    throw std::invalid_argument("step: dt must be positive");
  }
  return x + dt * derivative(model, x, u);
}

void linearize_step(const AgentModel& model,
                    const Eigen::Ref<const VectorXd>& x,
                    const Eigen::Ref<const VectorXd>& u, double dt, MatrixXd& A,
                    MatrixXd& B) {
  check_dims(model, x, u);
  if (dt <= 0.0) {
    throw std::invalid_argument("linearize_step: dt must be positive");
  }
  const int n = model.state_dim;
  const int m = model.input_dim;
  // A = I + dt*df/dx and B = dt*df/du written directly into the outputs;
  // intermediate fx/fu matrices would be reallocated on every call.
  A.setIdentity(n, n);
  B.setZero(n, m);
  switch (model.kind) {
    case ModelKind::Unicycle4: {
      const double theta = x[2], v = x[3];
      A(0, 2) = dt * -v * std::sin(theta);
      A(0, 3) = dt * std::cos(theta);
      A(1, 2) = dt * v * std::cos(theta);
      A(1, 3) = dt * std::sin(theta);
      B(2, 0) = dt;
      B(3, 1) = dt;
      break;
    }
    case ModelKind::Quadrotor6: {
      const double roll = x[3], pitch = x[4], yaw = x[5];
      check_pitch(pitch);
      const Mat3 rz = rot_z(yaw), ry = rot_y(pitch), rx = rot_x(roll);
      const Vec3 vb = u.head<3>();
      const Vec3 rates = u.tail<3>();
      A.block<3, 1>(0, 3) += dt * (rz * ry * drot_x(roll) * vb);
      A.block<3, 1>(0, 4) += dt * (rz * drot_y(pitch) * rx * vb);
      A.block<3, 1>(0, 5) += dt * (drot_z(yaw) * ry * rx * vb);
      A.block<3, 1>(3, 3) += dt * (euler_rate_matrix_droll(roll, pitch) * rates);
      A.block<3, 1>(3, 4) +=
          dt * (euler_rate_matrix_dpitch(roll, pitch) * rates);
      B.block<3, 3>(0, 0) = dt * (rz * ry * rx);
      B.block<3, 3>(3, 3) = dt * euler_rate_matrix(roll, pitch);
      break;
    }
  }
}

JointLayout layout_of(const std::vector<AgentModel>& models) {
  std::vector<int> sd, id;
  sd.reserve(models.size());
  id.reserve(models.size());
  for (const auto& m : models) {
    sd.push_back(m.state_dim);
    id.push_back(m.input_dim);
  }
  return JointLayout(std::move(sd), std::move(id));
}

JointState joint_step(const std::vector<AgentModel>& models,
                      const JointState& x, const JointControl& u, double dt) {
  const int n_agents = static_cast<int>(models.size());
  if (x.num_agents() != n_agents || u.num_agents() != n_agents) {
    throw std::invalid_argument("joint_step: agent count mismatch");
  }
  JointState next = x;
  for (int i = 0; i < n_agents; ++i) {
    if (x.block_dim(i) != models[i].state_dim ||
        u.block_dim(i) != models[i].input_dim) {
      throw std::invalid_argument("joint_step: block dimension mismatch");
    }
    next.agent(i) = step(models[i], x.agent(i), u.agent(i), dt);
  }
  return next;
}

}  // namespace pilqr
