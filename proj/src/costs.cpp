#include "pilqr/costs.hpp"

#include <cmath>

#include "pilqr/game.hpp"
#include "pilqr/ilqr.hpp"

namespace pilqr {

namespace {

void check_validated(const GameDefinition& game) {
  if (!game.is_validated()) {
    throw std::logic_error(
        "potential function requires a symmetry-validated game");
  }
}

// Deviation vector with angle indices wrapped to (-pi, pi].
VectorXd state_deviation(const TrackingCost& cost, const VectorXd& x) {
  VectorXd d = x - cost.x_ref;
  for (int idx : cost.angle_indices) {
    d[idx] = wrap_angle(d[idx]);
  }
  return d;
}

VectorXd input_deviation(const TrackingCost& cost, const VectorXd& u) {
  if (cost.u_ref.size() == 0) return u;
  return u - cost.u_ref;
}

VectorXd pick(const VectorXd& x, const std::vector<int>& idx) {
  VectorXd out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = x[idx[k]];
  return out;
}

}  // namespace

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a > M_PI) a -= 2.0 * M_PI;
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

void TrackingCost::validate() const {
  if (q_diag.size() != x_ref.size()) {
    throw std::invalid_argument("TrackingCost: q_diag/x_ref size mismatch");
  }
  if (qt_diag.size() != q_diag.size()) {
    throw std::invalid_argument("TrackingCost: qt_diag size mismatch");
  }
  if ((q_diag.array() < 0.0).any() || (qt_diag.array() < 0.0).any()) {
    throw std::invalid_argument("TrackingCost: Q entries must be >= 0");
  }
  if ((r_diag.array() <= 0.0).any()) {
    throw std::invalid_argument("TrackingCost: R entries must be > 0");
  }
  for (int idx : angle_indices) {
    if (idx < 0 || idx >= q_diag.size()) {
      throw std::invalid_argument("TrackingCost: angle index out of range");
    }
  }
}

double tracking_running(const TrackingCost& cost, const VectorXd& x,
                        const VectorXd& u) {
  if (x.size() != cost.q_diag.size() || u.size() != cost.r_diag.size()) {
    throw std::invalid_argument("tracking_running: dimension mismatch");
  }
  const VectorXd dx = state_deviation(cost, x);
  const VectorXd du = input_deviation(cost, u);
  return dx.dot(cost.q_diag.cwiseProduct(dx)) +
         du.dot(cost.r_diag.cwiseProduct(du));
}

double tracking_terminal(const TrackingCost& cost, const VectorXd& x_T) {
  if (x_T.size() != cost.qt_diag.size()) {
    throw std::invalid_argument("tracking_terminal: dimension mismatch");
  }
  const VectorXd dx = state_deviation(cost, x_T);
  return dx.dot(cost.qt_diag.cwiseProduct(dx));
}

double collision_pair(const CollisionCost& cost, const VectorXd& x_i,
                      const VectorXd& x_j) {
  const VectorXd delta =
      pick(x_i, cost.position_indices_i) - pick(x_j, cost.position_indices_j);
  const double d = delta.norm();
  if (d >= cost.d_prox) return 0.0;
  const double shortfall = d - cost.d_prox;
  return cost.beta * shortfall * shortfall;
}

void collision_delta_expansion(const CollisionCost& cost, const VectorXd& delta,
                               VectorXd& grad, MatrixXd& hess,
                               bool project_psd) {
  const int dim = static_cast<int>(delta.size());
  grad = VectorXd::Zero(dim);
  hess = MatrixXd::Zero(dim, dim);
  const double d = delta.norm();
  if (d >= cost.d_prox) return;
  if (d < 1e-12) {
    // Coincident positions: the distance gradient is undefined; keep a
    // descent-free point with isotropic curvature.
    hess = 2.0 * cost.beta * MatrixXd::Identity(dim, dim);
    return;
  }
  grad = (2.0 * cost.beta * (d - cost.d_prox) / d) * delta;
  hess = 2.0 * cost.beta *
         ((1.0 - cost.d_prox / d) * MatrixXd::Identity(dim, dim) +
          (cost.d_prox / (d * d * d)) * (delta * delta.transpose()));
  if (project_psd) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(hess);
    const VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
    hess = eig.eigenvectors() * clamped.asDiagonal() *
           eig.eigenvectors().transpose();
  }
}

double potential_running(const GameDefinition& game, const JointState& x,
                         const JointControl& u) {
  check_validated(game);
  double total = 0.0;
  const int n = game.num_agents();
  // Evaluated once per stage per line-search trial; index the joint vectors
  // in place rather than materializing per-agent copies.
  for (int i = 0; i < n; ++i) {
    const TrackingCost& tc = game.agents[i].tracking;
    const int so = x.offsets[i];
    const int uo = u.offsets[i];
    double s = 0.0;
    for (int k = 0; k < tc.q_diag.size(); ++k) {
      double d = x.values[so + k] - tc.x_ref[k];
      for (int idx : tc.angle_indices) {
        if (idx == k) {
          d = wrap_angle(d);
          break;
        }
      }
      s += tc.q_diag[k] * d * d;
    }
    for (int k = 0; k < tc.r_diag.size(); ++k) {
      const double d =
          u.values[uo + k] - (tc.u_ref.size() > 0 ? tc.u_ref[k] : 0.0);
      s += tc.r_diag[k] * d * d;
    }
    total += s;
  }
  // Each unordered pair counted exactly once.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const CollisionCost& cc = game.couplings.at({i, j});
      double d2 = 0.0;
      for (std::size_t a = 0; a < cc.position_indices_i.size(); ++a) {
        const double d = x.values[x.offsets[i] + cc.position_indices_i[a]] -
                         x.values[x.offsets[j] + cc.position_indices_j[a]];
        d2 += d * d;
      }
      const double d = std::sqrt(d2);
      if (d < cc.d_prox) total += cc.beta * (d - cc.d_prox) * (d - cc.d_prox);
    }
  }
  return total;
}

double potential_terminal(const GameDefinition& game, const JointState& x_T) {
  check_validated(game);
  double total = 0.0;
  for (int i = 0; i < game.num_agents(); ++i) {
    total += tracking_terminal(game.agents[i].tracking, x_T.agent(i));
  }
  return total;
}

void potential_stage_expansion(const GameDefinition& game, const JointState& x,
                               const JointControl& u, StageExpansion& out,
                               bool project_psd) {
  check_validated(game);
  out.set_zero(static_cast<int>(x.values.size()),
               static_cast<int>(u.values.size()));
  const int n = game.num_agents();
  for (int i = 0; i < n; ++i) {
    const TrackingCost& tc = game.agents[i].tracking;
    const int so = x.offsets[i];
    const int uo = u.offsets[i];
    for (int k = 0; k < tc.q_diag.size(); ++k) {
      double d = x.values[so + k] - tc.x_ref[k];
      for (int idx : tc.angle_indices) {
        if (idx == k) {
          d = wrap_angle(d);
          break;
        }
      }
      out.lx[so + k] += 2.0 * tc.q_diag[k] * d;
      out.lxx(so + k, so + k) += 2.0 * tc.q_diag[k];
    }
    for (int k = 0; k < tc.r_diag.size(); ++k) {
      const double d =
          u.values[uo + k] - (tc.u_ref.size() > 0 ? tc.u_ref[k] : 0.0);
      out.lu[uo + k] += 2.0 * tc.r_diag[k] * d;
      out.luu(uo + k, uo + k) += 2.0 * tc.r_diag[k];
    }
  }
  VectorXd g;
  MatrixXd h;
  VectorXd delta;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const CollisionCost& cc = game.couplings.at({i, j});
      const int dim = static_cast<int>(cc.position_indices_i.size());
      delta.resize(dim);
      for (int a = 0; a < dim; ++a) {
        delta[a] = x.values[x.offsets[i] + cc.position_indices_i[a]] -
                   x.values[x.offsets[j] + cc.position_indices_j[a]];
      }
      collision_delta_expansion(cc, delta, g, h, project_psd);
      if (g.isZero(0.0) && h.isZero(0.0)) continue;
      for (int a = 0; a < dim; ++a) {
        const int ia = x.offsets[i] + cc.position_indices_i[a];
        const int ja = x.offsets[j] + cc.position_indices_j[a];
        out.lx[ia] += g[a];
        out.lx[ja] -= g[a];
        for (int b = 0; b < dim; ++b) {
          const int ib = x.offsets[i] + cc.position_indices_i[b];
          const int jb = x.offsets[j] + cc.position_indices_j[b];
          out.lxx(ia, ib) += h(a, b);
          out.lxx(ja, jb) += h(a, b);
          out.lxx(ia, jb) -= h(a, b);
          out.lxx(ja, ib) -= h(a, b);
        }
      }
    }
  }
}

void potential_terminal_expansion(const GameDefinition& game,
                                  const JointState& x_T, VectorXd& grad,
                                  MatrixXd& hess) {
  check_validated(game);
  const int total = static_cast<int>(x_T.values.size());
  grad.setZero(total);
  hess.setZero(total, total);
  for (int i = 0; i < game.num_agents(); ++i) {
    const TrackingCost& tc = game.agents[i].tracking;
    VectorXd dx = x_T.agent(i) - tc.x_ref;
    for (int idx : tc.angle_indices) dx[idx] = wrap_angle(dx[idx]);
    const int so = x_T.offsets[i];
    grad.segment(so, dx.size()) = 2.0 * tc.qt_diag.cwiseProduct(dx);
    hess.block(so, so, dx.size(), dx.size()).diagonal() = 2.0 * tc.qt_diag;
  }
}

QuadraticExpansion quadraticize(const GameDefinition& game,
                                const NominalTrajectory& trajectory) {
  if (trajectory.states.size() < 2) {
    throw std::invalid_argument("quadraticize: trajectory too short");
  }
  for (const auto& s : trajectory.states) {
    if (!s.allFinite()) {
      throw std::invalid_argument("quadraticize: non-finite state");
    }
  }
  QuadraticExpansion out;
  out.stages.resize(trajectory.controls.size());
  for (std::size_t t = 0; t < trajectory.controls.size(); ++t) {
    potential_stage_expansion(game, game.joint_state(trajectory.states[t]),
                              game.joint_control(trajectory.controls[t]),
                              out.stages[t]);
  }
  potential_terminal_expansion(game,
                               game.joint_state(trajectory.states.back()),
                               out.terminal_grad, out.terminal_hess);
  return out;
}

}  // namespace pilqr
