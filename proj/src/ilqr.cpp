#include "pilqr/ilqr.hpp"

#include <chrono>
#include <cmath>

namespace pilqr {

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::Tolerance:
      return "tolerance";
    case TerminationReason::MaxIterations:
      return "max-iter";
    case TerminationReason::LineSearchFailure:
      return "line-search-failure";
  }
  return "unknown";
}

NominalTrajectory rollout(const Ocp& ocp, const std::vector<VectorXd>& controls,
                          const VectorXd& x0) {
  if (static_cast<int>(controls.size()) != ocp.horizon()) {
    throw std::invalid_argument("rollout: control sequence length mismatch");
  }
  if (x0.size() != ocp.state_dim()) {
    throw std::invalid_argument("rollout: x0 dimension mismatch");
  }
  NominalTrajectory traj;
  const int T = ocp.horizon();
  traj.states.reserve(T + 1);
  traj.controls = controls;
  traj.stage_costs.resize(T);
  traj.states.push_back(x0);
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    traj.stage_costs[t] = ocp.stage_cost(t, traj.states[t], controls[t]);
    total += traj.stage_costs[t];
    VectorXd next = ocp.step(t, traj.states[t], controls[t]);
    if (!next.allFinite()) {
      throw std::runtime_error("rollout: diverged (non-finite state)");
    }
    traj.states.push_back(std::move(next));
  }
  total += ocp.terminal_cost(traj.states.back());
  if (!std::isfinite(total)) {
    throw std::runtime_error("rollout: diverged (non-finite cost)");
  }
  traj.total_cost = total;
  return traj;
}

BackwardPassResult backward_pass(const std::vector<StageExpansion>& stages,
                                 const std::vector<MatrixXd>& A,
                                 const std::vector<MatrixXd>& B,
                                 const VectorXd& terminal_grad,
                                 const MatrixXd& terminal_hess, double lambda) {
  const int T = static_cast<int>(stages.size());
  if (static_cast<int>(A.size()) != T || static_cast<int>(B.size()) != T) {
    throw std::invalid_argument("backward_pass: horizon mismatch");
  }
  BackwardPassResult result;
  result.policy.k.resize(T);
  result.policy.K.resize(T);

  VectorXd vx = terminal_grad;
  MatrixXd vxx = terminal_hess;
  const int m = T > 0 ? static_cast<int>(stages[0].lu.size()) : 0;
  const int n = static_cast<int>(terminal_grad.size());
  const MatrixXd reg = lambda * MatrixXd::Identity(m, m);

  // All per-stage temporaries are hoisted out of the loop; at small problem
  // sizes the recursion is otherwise dominated by allocations.
  MatrixXd bt_vxx(m, n), at_vxx(n, n), qxx(n, n), quu(m, m), qux(m, n);
  MatrixXd quu_reg(m, m), quu_K(m, n), tmp_mm(m, m), tmp_nn(n, n);
  VectorXd qx(n), qu(m), k(m), quu_k(m);
  MatrixXd K(m, n);
  Eigen::LLT<MatrixXd> llt(m);

  // lazyProduct skips the packed-GEMM machinery, which costs more than the
  // arithmetic at the joint-state sizes this recursion runs at.
  for (int t = T - 1; t >= 0; --t) {
    const StageExpansion& e = stages[t];
    bt_vxx.noalias() = B[t].transpose().lazyProduct(vxx);
    at_vxx.noalias() = A[t].transpose().lazyProduct(vxx);
    qx = e.lx;
    qx.noalias() += A[t].transpose().lazyProduct(vx);
    qu = e.lu;
    qu.noalias() += B[t].transpose().lazyProduct(vx);
    qxx = e.lxx;
    qxx.noalias() += at_vxx.lazyProduct(A[t]);
    quu = e.luu;
    quu.noalias() += bt_vxx.lazyProduct(B[t]);
    qux = e.lux;
    qux.noalias() += bt_vxx.lazyProduct(A[t]);

    quu_reg = quu + reg;
    tmp_mm = quu_reg.transpose();
    quu_reg = 0.5 * (quu_reg + tmp_mm);
    llt.compute(quu_reg);
    if (llt.info() != Eigen::Success) {
      result.ok = false;
      return result;
    }
    k = qu;
    llt.solveInPlace(k);
    k = -k;
    K = qux;
    llt.solveInPlace(K);
    K = -K;

    quu_k.noalias() = quu.lazyProduct(k);
    result.dv1 += k.dot(qu);
    result.dv2 += 0.5 * k.dot(quu_k);

    // vx uses K^T (quu k + qu) + qux^T k; vxx uses K^T (quu K + qux) + qux^T K.
    quu_k += qu;
    vx = qx;
    vx.noalias() += K.transpose().lazyProduct(quu_k);
    vx.noalias() += qux.transpose().lazyProduct(k);
    quu_K.noalias() = quu.lazyProduct(K);
    quu_K += qux;
    vxx = qxx;
    vxx.noalias() += K.transpose().lazyProduct(quu_K);
    vxx.noalias() += qux.transpose().lazyProduct(K);
    tmp_nn = vxx.transpose();
    vxx = 0.5 * (vxx + tmp_nn);

    result.policy.k[t] = k;
    result.policy.K[t] = K;
  }
  result.ok = true;
  return result;
}

std::optional<NominalTrajectory> forward_pass(const Ocp& ocp,
                                              const NominalTrajectory& ref,
                                              const FeedbackPolicy& policy,
                                              double alpha) {
  const int T = ocp.horizon();
  NominalTrajectory traj;
  traj.states.reserve(T + 1);
  traj.controls.resize(T);
  traj.stage_costs.resize(T);
  traj.states.push_back(ref.states[0]);
  double total = 0.0;
  VectorXd dx(ref.states[0].size());
  for (int t = 0; t < T; ++t) {
    const VectorXd& x = traj.states[t];
    dx = x - ref.states[t];
    VectorXd u = ref.controls[t] + alpha * policy.k[t];
    u.noalias() += policy.K[t] * dx;
    if (!u.allFinite()) return std::nullopt;
    traj.stage_costs[t] = ocp.stage_cost(t, x, u);
    total += traj.stage_costs[t];
    VectorXd next = ocp.step(t, x, u);
    if (!next.allFinite() || !std::isfinite(total)) return std::nullopt;
    traj.controls[t] = std::move(u);
    traj.states.push_back(std::move(next));
  }
  total += ocp.terminal_cost(traj.states.back());
  if (!std::isfinite(total)) return std::nullopt;
  traj.total_cost = total;
  return traj;
}

namespace {

double grow_reg(double lambda, const SolverConfig& cfg) {
  return lambda <= 0.0 ? cfg.reg_floor
                       : std::min(lambda * cfg.reg_growth, cfg.reg_max * 10.0);
}

double shrink_reg(double lambda, const SolverConfig& cfg) {
  lambda *= cfg.reg_shrink;
  return lambda < 1e-10 ? 0.0 : lambda;
}

}  // namespace

SolveResult solve(const Ocp& ocp, const VectorXd& x0,
                  const std::vector<VectorXd>* initial_controls,
                  const SolverConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const int T = ocp.horizon();
  const int m = ocp.input_dim();
  const int n = ocp.state_dim();

  std::vector<VectorXd> controls;
  if (initial_controls != nullptr) {
    controls = *initial_controls;
  } else {
    controls.assign(T, VectorXd::Zero(m));
  }

  SolveResult result;
  result.trajectory = rollout(ocp, controls, x0);
  result.report.cost_trace.push_back(result.trajectory.total_cost);
  result.report.reason = TerminationReason::MaxIterations;

  std::vector<StageExpansion> stages(T);
  std::vector<MatrixXd> A(T, MatrixXd(n, n)), B(T, MatrixXd(n, m));
  VectorXd terminal_grad;
  MatrixXd terminal_hess;
  double lambda = config.reg_init;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    for (int t = 0; t < T; ++t) {
      ocp.linearize(t, result.trajectory.states[t],
                    result.trajectory.controls[t], A[t], B[t]);
      ocp.stage_expansion(t, result.trajectory.states[t],
                          result.trajectory.controls[t], stages[t]);
    }
    ocp.terminal_expansion(result.trajectory.states.back(), terminal_grad,
                           terminal_hess);

    bool accepted = false;
    bool done = false;
    while (true) {
      BackwardPassResult bw =
          backward_pass(stages, A, B, terminal_grad, terminal_hess, lambda);
      if (!bw.ok) {
        if (lambda >= config.reg_max) {
          result.report.converged = false;
          result.report.reason = TerminationReason::LineSearchFailure;
          done = true;
          break;
        }
        lambda = grow_reg(lambda, config);
        continue;
      }

      // Stationary point: the LQ model predicts no usable decrease.
      const double predicted = -(bw.dv1 + bw.dv2);
      if (std::abs(bw.dv1) < config.abs_tol && std::abs(predicted) < config.abs_tol) {
        result.report.converged = true;
        result.report.reason = TerminationReason::Tolerance;
        result.policy = std::move(bw.policy);
        done = true;
        break;
      }

      double alpha = 1.0;
      for (int ls = 0; ls < config.line_search_steps; ++ls, alpha *= 0.5) {
        auto candidate = forward_pass(ocp, result.trajectory, bw.policy, alpha);
        if (!candidate) continue;
        const double decrease =
            result.trajectory.total_cost - candidate->total_cost;
        // Sufficient decrease against the LQ model's prediction for this
        // step length; plain strict decrease lets the solver chatter with
        // tiny steps when hinge terms keep entering and leaving.
        const double expected = -(alpha * bw.dv1 + alpha * alpha * bw.dv2);
        const bool sufficient =
            expected > 0.0 ? decrease > 0.1 * expected : decrease > 0.0;
        if (decrease > 0.0 && sufficient) {
          const double rel =
              decrease / std::max(std::abs(result.trajectory.total_cost), 1e-12);
          result.trajectory = std::move(*candidate);
          result.policy = std::move(bw.policy);
          result.report.cost_trace.push_back(result.trajectory.total_cost);
          result.report.iterations += 1;
          lambda = shrink_reg(lambda, config);
          accepted = true;
          if (decrease < config.abs_tol || rel < config.rel_tol) {
            result.report.converged = true;
            result.report.reason = TerminationReason::Tolerance;
            done = true;
          }
          break;
        }
      }
      if (accepted || done) break;

      if (lambda >= config.reg_max) {
        result.report.converged = false;
        result.report.reason = TerminationReason::LineSearchFailure;
        done = true;
        break;
      }
      lambda = grow_reg(lambda, config);
    }
    if (done) break;
  }

  result.controls = result.trajectory.controls;
  result.report.final_regularization = lambda;
  result.report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

}  // namespace pilqr
