// One-bit pilot-based channel estimation.
//
// Phase I (surface off) observes y = (a (x) I_M) h_d + w and estimates the
// direct channel. Phase II (surface on) is split into N sub-frames, each
// repeating the pilot sequence a under the surface pattern theta^(s) taken
// from the phases of the s-th DFT column, which makes the stacked regressor
//     A = [a theta^(1)T (x) I_M; ...; a theta^(N)T (x) I_M]
// full column rank for vec(G diag(h_r)). The direct path is assumed removed
// before the ADC up to a residual e_d ~ CN(0, sigma_e^2 / M I), which enters
// as (a_all (x) I_M) e_d.
//
// Everything is solved in the real domain: for complex A and h,
//     A_R = [[Re A, -Im A], [Im A, Re A]],  h_R = [Re h; Im h],
// so rows 0..K-1 carry real parts and rows K..2K-1 imaginary parts of the K
// complex observations, ordered (sub-frame, slot, antenna) with the antenna
// fastest.

#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "irsq/channel_model.hpp"
#include "irsq/probit.hpp"

namespace irsq {

enum class PilotPhase { Direct, Reflect };

struct PilotFrame {
  Eigen::VectorXcd symbols;              // a, length tau
  PilotPhase phase = PilotPhase::Direct;
  std::vector<PhaseVector> irs_pattern;  // one per Phase II sub-frame

  [[nodiscard]] int tau() const { return static_cast<int>(symbols.size()); }
  [[nodiscard]] int subframes() const { return phase == PilotPhase::Direct ? 1 : static_cast<int>(irs_pattern.size()); }
  void validate() const;
};

/// Unit-modulus pilots a_t = e^{j(phi0 + 2 pi t / tau)} with a random common
/// offset phi0. Distinct phases matter for 1-bit data: with QPSK every real
/// coordinate is seen along two directions only and the sign likelihood is
/// frequently separable.
PilotFrame gen_pilots(int tau, Rng& rng);

/// The N DFT phase patterns, pattern s having theta_n = -2 pi s n / N.
std::vector<PhaseVector> dft_patterns(int elements);

/// Phase II frame: the same pilot construction plus the DFT training patterns.
PilotFrame gen_reflect_pilots(int tau, int elements, Rng& rng);

struct RealizedPilotSystem {
  PilotPhase phase = PilotPhase::Direct;
  int antennas = 0;
  int elements = 0;  // unknown columns: 1 in Phase I, N in Phase II
  int tau = 0;
  int subframes = 1;

  Eigen::MatrixXd regressor;           // A_R, 2 M tau' x d
  Eigen::VectorXd signs;               // r_R in {-1, +1}
  Eigen::MatrixXd refined;             // row i = signs[i] * regressor.row(i)
  Eigen::VectorXd noise_std;           // per-row effective noise standard deviation
  Eigen::MatrixXd residual_regressor;  // real-stacked a_all (x) I_M, Phase II only
  double residual_var = 0.0;           // per real dimension of e_d: sigma_e^2 / (2 M)
  double noise_var = 0.0;              // per real dimension of w: sigma_w^2 / 2
  Eigen::VectorXd truth;               // h_R used for the simulation

  [[nodiscard]] Eigen::Index rows() const { return regressor.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return regressor.cols(); }
  /// 0-based pilot slot feeding real row i.
  [[nodiscard]] int slot_of_row(Eigen::Index i) const;
};

/// Complex regressor (before real stacking) for the frame and antenna count.
Eigen::MatrixXcd pilot_regressor(const PilotFrame& frame, int antennas);

/// [[Re A, -Im A], [Im A, Re A]]
Eigen::MatrixXd real_stack(const Eigen::MatrixXcd& A);
Eigen::VectorXd real_stack(const Eigen::VectorXcd& v);
Eigen::VectorXcd complex_unstack(const Eigen::VectorXd& v);

/// Simulates the frame over `ch` and quantizes to signs. Phase II needs
/// sigma_e2; the residual e_d is drawn from CN(0, sigma_e2 / M) unless
/// `direct_residual` supplies it. Draw order: residual, then noise.
RealizedPilotSystem realize_system(const ChannelSet& ch, const PilotFrame& frame, double noise_var,
                                   std::optional<double> sigma_e2, Rng& rng,
                                   const std::optional<Eigen::VectorXcd>& direct_residual = std::nullopt);

struct FisherInfo {
  Eigen::MatrixXd J;
  double crlb_trace = 0.0;  // tr(J^{-1}), +inf when J is singular
  double sigma_e2 = 0.0;    // error_scale * tr(J^{-1})
  bool invertible = false;
};

/// sqrt(2), the direct-error variance multiplier applied to tr(J^{-1}).
inline constexpr double kDirectErrorScale = 1.4142135623730951;

/// J = sum_i (2 / sigma_w^2) w(z_i) a_i a_i^T with z_i = sqrt(2 / sigma_w^2) a_i . h_R and
/// w(z) = phi(z)^2 / (Phi(z)(1 - Phi(z))). Rows are the unrefined regressor rows.
FisherInfo fisher_matrix(const Eigen::MatrixXd& regressor, const Eigen::VectorXd& h_real, double noise_var,
                         double error_scale = kDirectErrorScale);

/// Same with explicit per-row noise standard deviations.
FisherInfo fisher_matrix_rows(const Eigen::MatrixXd& regressor, const Eigen::VectorXd& h_real,
                              const Eigen::VectorXd& row_std, double error_scale = kDirectErrorScale);

struct EstimationResult {
  Eigen::VectorXcd h_hat;  // Phase I: h_d; Phase II: vec(G diag(h_r)), column-major M x N
  Eigen::VectorXd h_real;
  int iterations = 0;
  bool converged = false;
  double final_grad_norm = 0.0;
  double log_likelihood = 0.0;
  bool regularized = false;  // LMMSE needed the ridge fallback
  bool separable = false;    // ML: the sign data admit a perfect linear fit
  std::vector<double> history;
};

struct MlOptions {
  ProbitOptions probit{};
  /// Phase II termination on relative iterate change, as in the iterative
  /// reflecting-channel algorithm.
  double reflect_rel_tol = 1e-3;
  /// Phase II uses the constant step 1/L (L the Lipschitz bound of the
  /// gradient) instead of Barzilai-Borwein trial steps.
  bool reflect_fixed_step = true;
  /// Real-stacked initial point; empty starts from zero.
  Eigen::VectorXd start;
};

/// Phase I maximum-likelihood estimate of h_d. Separable sign data end on
/// the norm cap with converged = false.
EstimationResult ml_direct(const RealizedPilotSystem& sys, const MlOptions& opts = {});

/// Phase II maximum-likelihood estimate of vec(G diag(h_r)) using the
/// residual-inflated per-row noise in `sys.noise_std`.
EstimationResult ml_reflect(const RealizedPilotSystem& sys, const MlOptions& opts = {});

/// (A_R^T A_R)^{-1} A_R^T (sqrt(pi/2) * noise_std .* r_R). Throws
/// std::invalid_argument if A_R is rank deficient.
EstimationResult ls_estimate(const RealizedPilotSystem& sys);

/// Bussgang LMMSE with prior h ~ CN(0, channel_prior_var I):
///   C_yy = (v/2) A_R A_R^T + residual_var B_R B_R^T + noise_var I,  D = diag(C_yy)
///   C_rr = (2/pi) asin(D^{-1/2} C_yy D^{-1/2})
///   C_hr = sqrt(2/pi) (v/2) A_R^T D^{-1/2}
///   h    = C_hr C_rr^{-1} r_R
EstimationResult lmmse_estimate(const RealizedPilotSystem& sys, double channel_prior_var);

struct LmmseCovariances {
  Eigen::MatrixXd C_hr;
  Eigen::MatrixXd C_rr;
};
LmmseCovariances lmmse_covariances(const RealizedPilotSystem& sys, double channel_prior_var);

/// ||h_hat - h_true||^2 / ||h_true||^2
double nmse(const Eigen::VectorXcd& h_hat, const Eigen::VectorXcd& h_true);

/// vec(G diag(h_r)), column-major.
Eigen::VectorXcd cascade_vector(const ChannelSet& ch);

}  // namespace irsq
