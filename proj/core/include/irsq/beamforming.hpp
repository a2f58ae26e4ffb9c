// Passive beamforming: choose the reflecting-surface phases to maximize
// either the low-SNR proxy ||h||^2 / sigma_w^2 or the quantized-rate
// objective Gamma(theta) = sum_m |h_m|^2 / (sigma_w^2 + rho |h_m|^2).
//
// Solvers:
//   * semidefinite relaxation of the homogenized unit-modulus QCQP followed by
//     Gaussian randomization,
//   * gradient ascent on Gamma with Armijo backtracking and random restarts,
//   * phase matching (co-phase every reflected path with the direct path),
//   * exhaustive search over a uniform phase grid, used as a reference.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "irsq/channel_model.hpp"
#include "irsq/sdp.hpp"

namespace irsq {

/// Low-SNR objective in homogenized form. For u with unit-modulus entries
/// and |t| = 1,  [u; t]^H C [u; t] + const_term  equals the low-SNR objective
/// evaluated at u * conj(t).
struct HomogenizedObjective {
  Eigen::MatrixXcd C;  // [[Q, c], [c^H, 0]]
  Eigen::MatrixXcd Q;  // diag(h_r)^H G^H G diag(h_r) / sigma_w^2
  Eigen::VectorXcd c;  // diag(h_r)^H G^H h_d / sigma_w^2
  double const_term = 0.0;  // ||h_d||^2 / sigma_w^2

  [[nodiscard]] int elements() const { return static_cast<int>(Q.rows()); }
  /// u^H Q u + 2 Re(c^H u) + const_term
  [[nodiscard]] double evaluate(const Eigen::VectorXcd& u) const;
};

/// ||G diag(h_r) u + h_d||^2 / sigma_w^2, expanded as linear, quadratic and
/// constant terms.
double objective_trace(const ChannelSet& ch, const PhaseVector& phases, double noise_var);

HomogenizedObjective homogenize(const ChannelSet& ch, double noise_var);

/// Relaxation of the homogenized problem; result.value excludes const_term.
SdpResult solve_sdr(const HomogenizedObjective& obj, const SdpOptions& opts = {});

/// Eigendecomposes U = T S T^H, draws `count` vectors T S^{1/2} gamma with
/// gamma ~ CN(0, I), projects each to unit modulus relative to its last entry
/// and keeps the one with the largest objective (lowest draw index on ties).
PhaseVector randomize_round(const Eigen::MatrixXcd& U, const HomogenizedObjective& obj, int count, Rng& rng);

struct SdrSolution {
  Eigen::MatrixXcd U;
  double upper_bound = 0.0;  // relaxation value plus const_term
  PhaseVector rounded;
  double rounded_value = 0.0;
  int randomization_count = 0;
  SdpResult sdp;
};

SdrSolution sdr_beamform(const ChannelSet& ch, double noise_var, int randomizations, Rng& rng,
                         const SdpOptions& opts = {});

/// Gamma(theta) with sigma_w^2 = noise_var. For transmit power other than 1
/// pass noise_var / signal_var.
double rate_objective(const ChannelSet& ch, const PhaseVector& phases, double noise_var, double rho);

/// Analytic gradient of Gamma with respect to theta:
///   dGamma/dtheta_n = 2 sum_m w_m Im(conj(H_mn u_n) h_m),  w_m = sigma^2 / (sigma^2 + rho |h_m|^2)^2
/// where H = G diag(h_r).
Eigen::VectorXd rate_gradient(const ChannelSet& ch, const PhaseVector& phases, double noise_var, double rho);

struct GdConfig {
  int max_iters = 1000;
  double step_init = 1.0;
  double armijo_c = 1e-4;
  double backtrack_ratio = 0.5;
  double grad_tol = 1e-8;  // on ||grad|| / max(Gamma, 1e-300)
  int restarts = 10;

  void validate() const;
};

struct GdResult {
  PhaseVector theta;
  double value = 0.0;
  int iterations = 0;  // summed over restarts
  bool converged = false;  // the returned run met grad_tol
  std::vector<std::vector<double>> history;  // accepted Gamma values, per restart
};

/// Steepest ascent on Gamma from `cfg.restarts` uniform random starts. Each
/// iteration starts from min(step_init, 2 * previous step) and backtracks
/// until the Armijo condition holds, so accepted values never decrease.
GdResult gd_beamform(const ChannelSet& ch, double noise_var, double rho, const GdConfig& cfg, Rng& rng);

/// theta_n = -arg(p_n) with p = (h_d^H G diag(h_r))^T, the element-wise
/// maximizer of the linear term; p_n = 0 maps to theta_n = 0.
PhaseVector phase_match(const ChannelSet& ch, double noise_var);

/// Uniform random phases.
PhaseVector random_phases(int n, Rng& rng);

enum class OracleObjective { LowSnr, FullRate };

struct OracleResult {
  PhaseVector theta;
  double value = 0.0;
  std::uint64_t evaluated = 0;
};

inline constexpr std::uint64_t kOracleMaxPoints = 10'000'000;

class InstanceTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// True if grid^elements <= kOracleMaxPoints.
bool oracle_feasible(int elements, int grid);

/// Exhaustive search over theta in {2 pi k / grid}^N. Ties resolve to the
/// lexicographically smallest grid index. Throws InstanceTooLarge beyond
/// kOracleMaxPoints grid points.
OracleResult brute_force_oracle(const ChannelSet& ch, double noise_var, double rho, int grid, OracleObjective objective);

}  // namespace irsq
