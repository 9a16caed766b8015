#pragma once

#include <Eigen/Core>
#include <functional>

namespace tps {

/// Overflow-safe softmax: out_i = exp(x_i - max x) / sum_j exp(x_j - max x).
/// Output entries are strictly positive and sum to 1. Throws on NaN input.
Eigen::VectorXd softmax(const Eigen::VectorXd& x);

/// max(x) + log sum exp(x - max(x)); exact for singletons. Throws on empty input.
double log_sum_exp(const Eigen::VectorXd& x);

/// Digamma psi(x) for x > 0. Upward recurrence psi(x) = psi(x+1) - 1/x until
/// x >= 6, then the asymptotic series; absolute error < 1e-10 on [1e-3, 1e6].
double digamma(double x);

struct MaximizerOptions {
  int max_iters = 200;
  double grad_tol = 1e-4;       // sup-norm of the gradient
  double init_step = 1.0;
  double backtrack_factor = 0.5;
  double armijo_c = 1e-4;
};

struct MaximizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Gradient ascent with backtracking line search (Armijo condition on the
/// increase) for a concave differentiable objective. Accepted objective
/// values never decrease. Terminates when the gradient sup-norm drops below
/// grad_tol or max_iters accepted steps were taken. Throws if f or grad
/// becomes non-finite at an iterate.
MaximizerResult maximize_concave(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    Eigen::VectorXd x0, const MaximizerOptions& opts = {});

}  // namespace tps
