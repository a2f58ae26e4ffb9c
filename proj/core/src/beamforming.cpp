#include "irsq/beamforming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace irsq {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_noise(double noise_var) {
  if (!(noise_var > 0.0) || !std::isfinite(noise_var)) throw std::invalid_argument("noise_var must be positive");
}

void check_phases(const ChannelSet& ch, const PhaseVector& phases) {
  ch.validate();
  if (phases.size() != ch.elements())
    throw std::invalid_argument("phase vector length " + std::to_string(phases.size()) + " != elements " +
                                std::to_string(ch.elements()));
}

double gamma_of(const Eigen::VectorXcd& h, double noise_var, double rho) {
  double sum = 0.0;
  for (Eigen::Index m = 0; m < h.size(); ++m) {
    const double g = std::norm(h[m]);
    sum += g / (noise_var + rho * g);
  }
  return sum;
}

// Gamma and its theta-gradient given the cascade H = G diag(h_r).
double gamma_and_gradient(const Eigen::MatrixXcd& cascade, const Eigen::VectorXcd& direct, const Eigen::VectorXcd& u,
                          double noise_var, double rho, Eigen::VectorXd* grad) {
  const Eigen::VectorXcd h = cascade * u + direct;
  Eigen::VectorXcd weighted(h.size());
  double value = 0.0;
  for (Eigen::Index m = 0; m < h.size(); ++m) {
    const double g = std::norm(h[m]);
    const double den = noise_var + rho * g;
    value += g / den;
    weighted[m] = h[m] * (noise_var / (den * den));
  }
  if (grad != nullptr) {
    const Eigen::VectorXcd z = cascade.adjoint() * weighted;
    grad->resize(u.size());
    for (Eigen::Index n = 0; n < u.size(); ++n) (*grad)[n] = 2.0 * (z[n] * std::conj(u[n])).imag();
  }
  return value;
}

Eigen::VectorXcd unit_from_theta(const Eigen::VectorXd& theta) {
  Eigen::VectorXcd u(theta.size());
  for (Eigen::Index n = 0; n < theta.size(); ++n) u[n] = std::polar(1.0, theta[n]);
  return u;
}

}  // namespace

double HomogenizedObjective::evaluate(const Eigen::VectorXcd& u) const {
  return (u.adjoint() * Q * u)(0, 0).real() + 2.0 * c.dot(u).real() + const_term;
}

double objective_trace(const ChannelSet& ch, const PhaseVector& phases, double noise_var) {
  check_phases(ch, phases);
  check_noise(noise_var);
  const double constant = ch.direct.squaredNorm() / noise_var;
  if (ch.elements() == 0) return constant;
  const Eigen::MatrixXcd cascade = cascade_matrix(ch);
  const Eigen::VectorXcd reflected = cascade * phases.unit();
  const double linear = 2.0 * ch.direct.dot(reflected).real() / noise_var;
  const double quadratic = reflected.squaredNorm() / noise_var;
  return linear + quadratic + constant;
}

HomogenizedObjective homogenize(const ChannelSet& ch, double noise_var) {
  check_noise(noise_var);
  const Eigen::MatrixXcd cascade = cascade_matrix(ch);
  const Eigen::Index n = cascade.cols();
  HomogenizedObjective obj;
  obj.Q = cascade.adjoint() * cascade / noise_var;
  obj.Q = 0.5 * (obj.Q + obj.Q.adjoint()).eval();
  obj.c = cascade.adjoint() * ch.direct / noise_var;
  obj.const_term = ch.direct.squaredNorm() / noise_var;
  obj.C = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  obj.C.topLeftCorner(n, n) = obj.Q;
  obj.C.topRightCorner(n, 1) = obj.c;
  obj.C.bottomLeftCorner(1, n) = obj.c.adjoint();
  return obj;
}

SdpResult solve_sdr(const HomogenizedObjective& obj, const SdpOptions& opts) {
  return solve_unit_diagonal_sdp(obj.C, opts);
}

PhaseVector randomize_round(const Eigen::MatrixXcd& U, const HomogenizedObjective& obj, int count, Rng& rng) {
  const Eigen::Index dim = obj.C.rows();
  if (U.rows() != dim || U.cols() != dim) throw std::invalid_argument("U does not match the homogenized size");
  if (count < 1) throw std::invalid_argument("randomization count must be >= 1");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (U + U.adjoint()));
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  if (lambda.minCoeff() < -1e-8 * scale)
    throw std::invalid_argument("U is not positive semidefinite (min eigenvalue " + std::to_string(lambda.minCoeff()) +
                                ")");
  // Eigenvalues at rounding level are zero; their square roots would not be.
  const double cutoff = static_cast<double>(dim) * std::numeric_limits<double>::epsilon() * scale;
  const Eigen::VectorXd kept = (lambda.array() > cutoff).select(lambda, 0.0);
  const Eigen::MatrixXcd factor = eig.eigenvectors() * kept.cwiseSqrt().asDiagonal();

  const Eigen::Index n = dim - 1;
  Eigen::VectorXcd best_u = Eigen::VectorXcd::Ones(n);
  double best_value = -INFINITY;
  for (int draw = 0; draw < count; ++draw) {
    const Eigen::VectorXcd candidate = factor * complex_normal_vector(rng, static_cast<int>(dim));
    const Complex reference = candidate[n];
    Eigen::VectorXcd u(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Complex rel = candidate[k] * std::conj(reference);
      u[k] = rel == Complex{} ? Complex{1.0, 0.0} : rel / std::abs(rel);
    }
    const double value = obj.evaluate(u);
    if (value > best_value) {
      best_value = value;
      best_u = u;
    }
  }
  return PhaseVector::from_complex(best_u);
}

SdrSolution sdr_beamform(const ChannelSet& ch, double noise_var, int randomizations, Rng& rng,
                         const SdpOptions& opts) {
  const HomogenizedObjective obj = homogenize(ch, noise_var);
  SdrSolution sol;
  sol.sdp = solve_sdr(obj, opts);
  sol.U = sol.sdp.U;
  sol.upper_bound = sol.sdp.value + obj.const_term;
  sol.rounded = randomize_round(sol.U, obj, randomizations, rng);
  sol.rounded_value = obj.evaluate(sol.rounded.unit());
  sol.randomization_count = randomizations;
  return sol;
}

double rate_objective(const ChannelSet& ch, const PhaseVector& phases, double noise_var, double rho) {
  check_phases(ch, phases);
  check_noise(noise_var);
  return gamma_of(composite_channel(ch, phases), noise_var, rho);
}

Eigen::VectorXd rate_gradient(const ChannelSet& ch, const PhaseVector& phases, double noise_var, double rho) {
  check_phases(ch, phases);
  check_noise(noise_var);
  if (ch.elements() == 0) return {};
  Eigen::VectorXd grad;
  gamma_and_gradient(cascade_matrix(ch), ch.direct, phases.unit(), noise_var, rho, &grad);
  return grad;
}

void GdConfig::validate() const {
  if (max_iters < 1 || restarts < 1) throw std::invalid_argument("GdConfig: max_iters and restarts must be >= 1");
  if (!(step_init > 0.0) || !(grad_tol > 0.0)) throw std::invalid_argument("GdConfig: step_init and grad_tol must be > 0");
  if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw std::invalid_argument("GdConfig: armijo_c must lie in (0,1)");
  if (!(backtrack_ratio > 0.0 && backtrack_ratio < 1.0))
    throw std::invalid_argument("GdConfig: backtrack_ratio must lie in (0,1)");
}

GdResult gd_beamform(const ChannelSet& ch, double noise_var, double rho, const GdConfig& cfg, Rng& rng) {
  cfg.validate();
  ch.validate();
  check_noise(noise_var);
  GdResult result;
  if (ch.elements() == 0) {
    result.theta = PhaseVector::zeros(0);
    result.value = gamma_of(ch.direct, noise_var, rho);
    result.converged = true;
    return result;
  }
  const Eigen::MatrixXcd cascade = cascade_matrix(ch);
  const int n = ch.elements();
  std::uniform_real_distribution<double> uniform(0.0, kTwoPi);

  result.value = -INFINITY;
  for (int run = 0; run < cfg.restarts; ++run) {
    Eigen::VectorXd theta(n);
    for (int k = 0; k < n; ++k) theta[k] = uniform(rng);
    Eigen::VectorXd grad;
    double value = gamma_and_gradient(cascade, ch.direct, unit_from_theta(theta), noise_var, rho, &grad);
    std::vector<double> accepted{value};
    double step = cfg.step_init;
    bool converged = false;
    int iter = 0;
    for (; iter < cfg.max_iters; ++iter) {
      const double grad_sq = grad.squaredNorm();
      if (std::sqrt(grad_sq) <= cfg.grad_tol * std::max(value, 1e-300)) {
        converged = true;
        break;
      }
      step = std::min(cfg.step_init, 2.0 * step);
      bool moved = false;
      while (step > 1e-18) {
        const Eigen::VectorXd trial = theta + step * grad;
        Eigen::VectorXd trial_grad;
        const double trial_value =
            gamma_and_gradient(cascade, ch.direct, unit_from_theta(trial), noise_var, rho, &trial_grad);
        if (trial_value >= value + cfg.armijo_c * step * grad_sq) {
          theta = trial;
          value = trial_value;
          grad = std::move(trial_grad);
          moved = true;
          break;
        }
        step *= cfg.backtrack_ratio;
      }
      if (!moved) break;  // no ascent step resolvable in floating point
      accepted.push_back(value);
    }
    result.iterations += iter;
    result.history.push_back(std::move(accepted));
    if (value > result.value) {
      result.value = value;
      result.theta = PhaseVector(theta);
      result.converged = converged;
    }
  }
  return result;
}

PhaseVector phase_match(const ChannelSet& ch, double noise_var) {
  check_noise(noise_var);
  const Eigen::MatrixXcd cascade = cascade_matrix(ch);
  // p_n = sum_m conj(h_d,m) H_mn
  const Eigen::RowVectorXcd p = ch.direct.adjoint() * cascade;
  Eigen::VectorXd theta(p.size());
  for (Eigen::Index n = 0; n < p.size(); ++n) theta[n] = p[n] == Complex{} ? 0.0 : -std::arg(p[n]);
  return PhaseVector(std::move(theta));
}

PhaseVector random_phases(int n, Rng& rng) {
  std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
  Eigen::VectorXd theta(n);
  for (int k = 0; k < n; ++k) theta[k] = uniform(rng);
  return PhaseVector(std::move(theta));
}

bool oracle_feasible(int elements, int grid) {
  if (elements < 0 || grid < 1) return false;
  std::uint64_t points = 1;
  for (int k = 0; k < elements; ++k) {
    points *= static_cast<std::uint64_t>(grid);
    if (points > kOracleMaxPoints) return false;
  }
  return true;
}

OracleResult brute_force_oracle(const ChannelSet& ch, double noise_var, double rho, int grid,
                                OracleObjective objective) {
  ch.validate();
  check_noise(noise_var);
  if (grid < 1) throw std::invalid_argument("oracle grid must be >= 1");
  const int n = ch.elements();
  if (!oracle_feasible(n, grid))
    throw InstanceTooLarge("oracle grid " + std::to_string(grid) + "^" + std::to_string(n) + " exceeds the bound of " +
                           std::to_string(kOracleMaxPoints) + " points");

  auto score = [&](const Eigen::VectorXcd& h) {
    return objective == OracleObjective::LowSnr ? h.squaredNorm() / noise_var : gamma_of(h, noise_var, rho);
  };

  OracleResult result;
  if (n == 0) {
    result.theta = PhaseVector::zeros(0);
    result.value = score(ch.direct);
    result.evaluated = 1;
    return result;
  }

  const Eigen::MatrixXcd cascade = cascade_matrix(ch);
  std::vector<Complex> phasor(static_cast<std::size_t>(grid));
  for (int k = 0; k < grid; ++k) phasor[static_cast<std::size_t>(k)] = std::polar(1.0, kTwoPi * k / grid);

  std::vector<int> digit(static_cast<std::size_t>(n), 0);
  std::vector<int> best_digit = digit;
  auto rebuild = [&] {
    Eigen::VectorXcd h = ch.direct;
    for (int k = 0; k < n; ++k) h += cascade.col(k) * phasor[static_cast<std::size_t>(digit[static_cast<std::size_t>(k)])];
    return h;
  };
  Eigen::VectorXcd h = rebuild();
  double best = -INFINITY;
  std::uint64_t evaluated = 0;
  while (true) {
    const double value = score(h);
    ++evaluated;
    if (value > best) {
      best = value;
      best_digit = digit;
    }
    // odometer with the last element fastest
    int pos = n - 1;
    while (pos >= 0 && digit[static_cast<std::size_t>(pos)] == grid - 1) {
      digit[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
    const auto p = static_cast<std::size_t>(pos);
    if (pos == n - 1) {
      const Complex before = phasor[static_cast<std::size_t>(digit[p])];
      ++digit[p];
      h += cascade.col(pos) * (phasor[static_cast<std::size_t>(digit[p])] - before);
    } else {
      ++digit[p];
      h = rebuild();  // carry: refresh to keep incremental drift bounded
    }
  }

  Eigen::VectorXd theta(n);
  for (int k = 0; k < n; ++k) theta[k] = kTwoPi * best_digit[static_cast<std::size_t>(k)] / grid;
  result.theta = PhaseVector(std::move(theta));
  result.value = score(composite_channel(ch, result.theta));
  result.evaluated = evaluated;
  return result;
}

}  // namespace irsq
