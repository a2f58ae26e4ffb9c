// Probit log-likelihood of sign observations and its maximizer.
//
// Row i of `refined` is r_i a_i (the regressor row multiplied by its observed
// sign) and `row_std` holds the per-row noise standard deviation, so
//
//     L(h) = sum_i log Phi(refined_i . h / row_std_i).
//
// L is concave because log Phi is.

#pragma once

#include <vector>

#include <Eigen/Dense>

namespace irsq {

struct ProbitOptions {
  int max_iters = 20000;
  double grad_tol = 1e-8;        // on ||grad L||
  double rel_change_tol = 0.0;   // stop once ||h_k - h_{k-1}|| < tol * ||h_{k-1}||; 0 disables
  double step_init = 1.0;
  bool adaptive_step = true;     // try a Barzilai-Borwein step before backtracking
  double armijo_c = 1e-4;
  double backtrack_ratio = 0.5;
  double norm_cap = 1e3;         // divergence declared once ||h|| > norm_cap * sqrt(d)
  bool keep_history = false;

  void validate() const;
};

struct ProbitFit {
  Eigen::VectorXd h;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool diverged = false;   // norm cap reached, or separable data outside the relative-change stop
  bool separable = false;  // all margins refined_i . h positive at the returned point
  std::vector<double> history;  // accepted objective values when requested
};

double probit_log_likelihood(const Eigen::MatrixXd& refined, const Eigen::VectorXd& row_std, const Eigen::VectorXd& h);

Eigen::VectorXd probit_gradient(const Eigen::MatrixXd& refined, const Eigen::VectorXd& row_std, const Eigen::VectorXd& h);

/// Gradient ascent with Armijo backtracking from `start` (zero if empty).
/// Separable data end on the norm cap with diverged = true, unless the
/// relative-change stop fired first. Throws NumericalError if an accepted
/// step ever lowers the objective.
ProbitFit maximize_probit(const Eigen::MatrixXd& refined, const Eigen::VectorXd& row_std, const ProbitOptions& opts,
                          const Eigen::VectorXd& start = {});

/// phi(z)^2 / (Phi(z) (1 - Phi(z))), the per-row Fisher weight at z.
double probit_fisher_weight(double z);

}  // namespace irsq
