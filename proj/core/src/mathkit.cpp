#include "tps/mathkit.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tps {

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
  if (x.size() == 0) throw std::invalid_argument("softmax: empty input");
  if (x.hasNaN()) throw std::invalid_argument("softmax: NaN input");
  const double m = x.maxCoeff();
  Eigen::VectorXd out = (x.array() - m).exp();
  out /= out.sum();
  return out;
}

double log_sum_exp(const Eigen::VectorXd& x) {
  if (x.size() == 0) throw std::invalid_argument("log_sum_exp: empty input");
  const double m = x.maxCoeff();
  if (x.size() == 1) return m;
  return m + std::log((x.array() - m).exp().sum());
}

double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: requires x > 0");
  double acc = 0.0;
  while (x < 6.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // Asymptotic series in 1/x^2 with Bernoulli coefficients through B_14.
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = -inv2 * (1.0 / 12.0
                  - inv2 * (1.0 / 120.0
                  - inv2 * (1.0 / 252.0
                  - inv2 * (1.0 / 240.0
                  - inv2 * (1.0 / 132.0
                  - inv2 * (691.0 / 32760.0
                  - inv2 * (1.0 / 12.0)))))));
  return acc + std::log(x) - 0.5 * inv + series;
}

MaximizerResult maximize_concave(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    Eigen::VectorXd x0, const MaximizerOptions& opts) {
  constexpr double kMinStep = 1e-20;

  auto check_finite = [](double v, const char* what, int iter) {
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "maximize_concave: non-finite " << what << " at iteration " << iter;
      throw std::runtime_error(msg.str());
    }
  };

  MaximizerResult res;
  res.x = std::move(x0);
  res.value = f(res.x);
  check_finite(res.value, "objective", 0);

  double step = opts.init_step;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    Eigen::VectorXd g = grad(res.x);
    if (!g.allFinite()) check_finite(std::numeric_limits<double>::quiet_NaN(), "gradient", iter);

    const double gnorm_inf = g.lpNorm<Eigen::Infinity>();
    if (gnorm_inf < opts.grad_tol) {
      res.converged = true;
      return res;
    }

    // Ascent along the gradient; the previous accepted step, doubled, is the
    // first trial so stiff penalties (tiny sigma) do not re-backtrack from
    // init_step every iteration.
    const double gsq = g.squaredNorm();
    double s = std::min(step * 2.0, opts.init_step * 1024.0);
    bool accepted = false;
    while (s >= kMinStep) {
      Eigen::VectorXd cand = res.x + s * g;
      const double fc = f(cand);
      check_finite(fc, "objective", iter);
      if (fc >= res.value + opts.armijo_c * s * gsq) {
        res.x = std::move(cand);
        res.value = fc;
        step = s;
        accepted = true;
        break;
      }
      s *= opts.backtrack_factor;
    }
    res.iterations = iter + 1;
    if (!accepted) {
      // No improving step representable; treat the iterate as stationary.
      res.converged = gnorm_inf < opts.grad_tol;
      return res;
    }
  }

  Eigen::VectorXd g = grad(res.x);
  res.converged = g.allFinite() && g.lpNorm<Eigen::Infinity>() < opts.grad_tol;
  return res;
}

}  // namespace tps
