#pragma once

// Central finite-difference oracles used to check analytic derivatives.
// Kept independent of the analytic code paths they verify.

#include <functional>

#include <Eigen/Dense>

namespace pilqr::testing {

inline Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

inline Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd J(f0.size(), x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    J.col(i) = (f(xp) - f(xm)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return J;
}

// Hessian-vector product of a scalar function by differencing its gradient.
inline Eigen::VectorXd fd_hessian_vector(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    const Eigen::VectorXd& x, const Eigen::VectorXd& v, double h = 1e-6) {
  return (grad(x + h * v) - grad(x - h * v)) / (2.0 * h);
}

inline double rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale < 1e-12) return (a - b).norm();
  return (a - b).norm() / scale;
}

}  // namespace pilqr::testing
