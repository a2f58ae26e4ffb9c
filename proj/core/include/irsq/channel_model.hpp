// Baseband channel generation and composition for an IRS-assisted SIMO uplink.
//
// A single-antenna user reaches an M-antenna base station over a direct link
// h_d and over a reflected link h_r -> G through an N-element reflecting
// surface. Each surface element applies a unit-modulus phase e^{j theta_n}.

#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <variant>

#include <Eigen/Dense>

namespace irsq {

using Complex = std::complex<double>;
using Rng = std::mt19937_64;

struct SystemConfig {
  int antennas = 4;        // M
  int elements = 0;        // N, 0 means no reflecting surface
  int pilot_length = 32;   // tau
  double noise_var = 1.0;  // sigma_w^2
  double signal_var = 1.0; // sigma_x^2
  int bits = 1;

  /// Throws std::invalid_argument on the first violated constraint.
  void validate() const;
};

/// SNR in dB to noise variance for unit transmit power.
double noise_var_from_snr_db(double snr_db);

struct ChannelSet {
  Eigen::VectorXcd direct;   // h_d, length M
  Eigen::VectorXcd incident; // h_r, length N
  Eigen::MatrixXcd reflect;  // G, M x N

  [[nodiscard]] int antennas() const { return static_cast<int>(direct.size()); }
  [[nodiscard]] int elements() const { return static_cast<int>(incident.size()); }

  /// Throws std::invalid_argument if the three links disagree on M or N or
  /// hold a non-finite entry.
  void validate() const;
};

/// Phase shifts of the reflecting elements. Angles are kept in [0, 2*pi)
/// together with their unit-modulus representation.
class PhaseVector {
 public:
  PhaseVector() = default;
  explicit PhaseVector(Eigen::VectorXd theta);

  static PhaseVector zeros(int n);
  /// Phases of arbitrary non-zero complex entries; a zero entry maps to 0.
  static PhaseVector from_complex(const Eigen::VectorXcd& z);

  [[nodiscard]] const Eigen::VectorXd& theta() const { return theta_; }
  [[nodiscard]] const Eigen::VectorXcd& unit() const { return unit_; }
  [[nodiscard]] int size() const { return static_cast<int>(theta_.size()); }

 private:
  Eigen::VectorXd theta_;
  Eigen::VectorXcd unit_;
};

/// Reduces an angle into [0, 2*pi).
double wrap_phase(double theta);

struct IrsOff {};
using IrsState = std::variant<PhaseVector, IrsOff>;

/// Draws a CN(0, variance) sample.
Complex complex_normal(Rng& rng, double variance = 1.0);
Eigen::VectorXcd complex_normal_vector(Rng& rng, int n, double variance = 1.0);

/// i.i.d. CN(0,1) entries on all three links.
ChannelSet gen_channels(const SystemConfig& cfg, Rng& rng);

/// G diag(u) h_r + h_d with the surface on, h_d with the surface off.
Eigen::VectorXcd composite_channel(const ChannelSet& ch, const IrsState& irs);

/// G diag(h_r); column n carries the reflected path through element n.
Eigen::MatrixXcd cascade_matrix(const ChannelSet& ch);

}  // namespace irsq
