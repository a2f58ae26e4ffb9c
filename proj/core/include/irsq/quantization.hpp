// Few-bit ADC model: per-dimension scalar quantizer, its distortion factor
// under Gaussian input, and the linearized achievable-rate expressions.

#pragma once

#include <vector>

#include <Eigen/Dense>

namespace irsq {

/// Minimum-MSE scalar quantizer for a unit-variance Gaussian input.
struct Codebook {
  int bits = 0;
  std::vector<double> levels;      // ascending, 2^bits entries
  std::vector<double> thresholds;  // ascending, 2^bits - 1 entries
  double distortion = 0.0;         // E[(x - Q(x))^2] for x ~ N(0,1)
  int iterations = 0;
  bool converged = false;
};

inline constexpr int kMaxLloydBits = 8;
inline constexpr int kMaxCodebookBits = 16;

/// Lloyd-Max codebook, computed on first use and cached for the process.
/// Depths above kMaxLloydBits use the asymptotically optimal compander
/// (point density proportional to pdf^{1/3}) without refinement.
const Codebook& lloyd_max_codebook(int bits);

/// Normalized MSE E|y - Q(y)|^2 / E|y|^2 for Gaussian input, the Bussgang
/// distortion factor rho_q. Exactly 1 - 2/pi at one bit.
double distortion_factor(int bits);

struct QuantizerSpec {
  int bits = 1;
  double rho = 0.0;

  static QuantizerSpec for_bits(int bits);
};

/// Per-dimension quantization of a complex vector. One bit returns
/// sgn(Re) + j sgn(Im) with sgn(0) = +1. More bits return Lloyd-Max levels
/// for a unit-variance real input; callers pre-scale by the per-dimension
/// standard deviation.
Eigen::VectorXcd quantize(const Eigen::VectorXcd& y, const QuantizerSpec& spec);

/// Scalar quantizer applied to one real value.
double quantize_real(double x, int bits);

/// log2(1 + (1-rho) sigma_x^2 sum_m |h_m|^2 / (sigma_w^2 + rho sigma_x^2 |h_m|^2)).
/// Equal to the determinant form log2|I + (1-rho)((1-rho)R_ww + rho diag(R_yy))^{-1} h sigma_x^2 h^H|
/// with R_yy = R_ww + sigma_x^2 h h^H, because the inner matrix is diagonal.
double achievable_rate(const Eigen::VectorXcd& h, double signal_var, double noise_var, double rho);

/// sigma_x^2 (1 - rho) ||h||^2 / sigma_w^2, the low-SNR linearization in nats.
double low_snr_rate_proxy(const Eigen::VectorXcd& h, double signal_var, double noise_var, double rho);

}  // namespace irsq
