#include "irsq/probit.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "irsq/errors.hpp"
#include "irsq/normal.hpp"

namespace irsq {

void ProbitOptions::validate() const {
  if (max_iters < 1) throw std::invalid_argument("ProbitOptions: max_iters must be >= 1");
  if (!(grad_tol > 0.0) || !(step_init > 0.0) || !(norm_cap > 0.0) || rel_change_tol < 0.0)
    throw std::invalid_argument("ProbitOptions: tolerances, step and cap must be positive");
  if (!(armijo_c > 0.0 && armijo_c < 1.0) || !(backtrack_ratio > 0.0 && backtrack_ratio < 1.0))
    throw std::invalid_argument("ProbitOptions: armijo_c and backtrack_ratio must lie in (0,1)");
}

namespace {

void check_shapes(const Eigen::MatrixXd& refined, const Eigen::VectorXd& row_std, const Eigen::VectorXd& h) {
  if (refined.rows() != row_std.size() || refined.cols() != h.size())
    throw std::invalid_argument("probit: dimension mismatch");
  if ((row_std.array() <= 0.0).any()) throw std::invalid_argument("probit: row_std must be positive");
}

// Value and gradient in one pass.
double evaluate(const Eigen::MatrixXd& refined, const Eigen::VectorXd& row_std, const Eigen::VectorXd& h,
                Eigen::VectorXd* grad) {
  const Eigen::VectorXd z = (refined * h).cwiseQuotient(row_std);
  double value = 0.0;
  Eigen::VectorXd coeff(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    value += normal::log_cdf(z[i]);
    coeff[i] = normal::mills(z[i]) / row_std[i];
  }
  if (grad != nullptr) *grad = refined.transpose() * coeff;
  return value;
}

}  // namespace

double probit_log_likelihood(const Eigen::MatrixXd& refined, const Eigen::VectorXd& row_std, const Eigen::VectorXd& h) {
  check_shapes(refined, row_std, h);
  return evaluate(refined, row_std, h, nullptr);
}

Eigen::VectorXd probit_gradient(const Eigen::MatrixXd& refined, const Eigen::VectorXd& row_std, const Eigen::VectorXd& h) {
  check_shapes(refined, row_std, h);
  Eigen::VectorXd grad;
  evaluate(refined, row_std, h, &grad);
  return grad;
}

double probit_fisher_weight(double z) {
  const double a = std::abs(z);
  // phi^2 / (Phi(a) Phi(-a)) = mills(-a) * phi(a) / Phi(a)
  return normal::mills(-a) * normal::pdf(a) / normal::cdf(a);
}

ProbitFit maximize_probit(const Eigen::MatrixXd& refined, const Eigen::VectorXd& row_std, const ProbitOptions& opts,
                          const Eigen::VectorXd& start) {
  opts.validate();
  const Eigen::Index d = refined.cols();
  ProbitFit fit;
  fit.h = start.size() == 0 ? Eigen::VectorXd::Zero(d) : start;
  check_shapes(refined, row_std, fit.h);
  const double cap = opts.norm_cap * std::sqrt(static_cast<double>(d));

  Eigen::VectorXd grad;
  fit.value = evaluate(refined, row_std, fit.h, &grad);
  if (opts.keep_history) fit.history.push_back(fit.value);

  Eigen::VectorXd prev_h;
  Eigen::VectorXd prev_grad;
  double step = opts.step_init;
  bool stopped_on_change = false;
  for (fit.iterations = 0; fit.iterations < opts.max_iters; ++fit.iterations) {
    const double grad_sq = grad.squaredNorm();
    if (std::sqrt(grad_sq) <= opts.grad_tol) {
      fit.converged = true;
      break;
    }
    if (opts.adaptive_step && prev_h.size() > 0) {
      // Barzilai-Borwein for ascent: s^T s / -(s^T y), y = grad change
      const Eigen::VectorXd s = fit.h - prev_h;
      const double sy = -s.dot(grad - prev_grad);
      step = sy > 0.0 ? s.squaredNorm() / sy : opts.step_init;
    } else {
      step = opts.step_init;
    }

    bool moved = false;
    Eigen::VectorXd trial_grad;
    const double step_floor = 1e-15 * (1.0 + fit.h.norm()) / std::sqrt(grad_sq);
    while (step > step_floor) {
      const Eigen::VectorXd trial = fit.h + step * grad;
      const double trial_value = evaluate(refined, row_std, trial, &trial_grad);
      if (std::isfinite(trial_value) && trial_value >= fit.value + opts.armijo_c * step * grad_sq) {
        if (trial_value < fit.value) throw NumericalError("probit ascent accepted a decreasing step");
        prev_h = std::move(fit.h);
        prev_grad = std::move(grad);
        fit.h = trial;
        fit.value = trial_value;
        grad = std::move(trial_grad);
        moved = true;
        break;
      }
      step *= opts.backtrack_ratio;
    }
    // No ascent step above rounding level: stationary to working precision.
    if (!moved) {
      fit.converged = true;
      break;
    }
    if (opts.keep_history) fit.history.push_back(fit.value);

    if (fit.h.norm() > cap) {
      fit.diverged = true;
      ++fit.iterations;
      break;
    }
    if (opts.rel_change_tol > 0.0 && (fit.h - prev_h).norm() < opts.rel_change_tol * prev_h.norm()) {
      fit.converged = true;
      stopped_on_change = true;
      ++fit.iterations;
      break;
    }
  }
  fit.grad_norm = grad.norm();
  if (!fit.converged && fit.grad_norm <= opts.grad_tol) fit.converged = true;

  // Every observed sign explained with a positive margin: L keeps rising
  // along h, so the maximizer lies at infinity.
  fit.separable = d > 0 && (refined * fit.h).minCoeff() > 0.0;
  if (fit.separable && !stopped_on_change) {
    if (fit.h.norm() < cap) {
      fit.h *= cap / fit.h.norm();
      fit.value = evaluate(refined, row_std, fit.h, &grad);
      fit.grad_norm = grad.norm();
    }
    fit.diverged = true;
  }
  if (fit.diverged) fit.converged = false;
  return fit;
}

}  // namespace irsq
