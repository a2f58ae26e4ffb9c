#include "irsq/quantization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "irsq/normal.hpp"

namespace irsq {
namespace {

constexpr double kLloydTolerance = 1e-12;
constexpr int kLloydMaxIterations = 10000;

struct CellMoments {
  double mass;
  double first;
  double second;
};

double pdf_or_zero(double x) { return std::isinf(x) ? 0.0 : normal::pdf(x); }
double x_pdf_or_zero(double x) { return std::isinf(x) ? 0.0 : x * normal::pdf(x); }

// Zeroth, first and second moment of N(0,1) restricted to [a, b].
CellMoments moments(double a, double b) {
  double mass;
  if (a >= 0.0) {
    mass = normal::sf(a) - normal::sf(b);
  } else if (b <= 0.0) {
    mass = normal::cdf(b) - normal::cdf(a);
  } else {
    mass = 1.0 - normal::cdf(a) - normal::sf(b);
  }
  const double first = pdf_or_zero(a) - pdf_or_zero(b);
  const double second = mass + x_pdf_or_zero(a) - x_pdf_or_zero(b);
  return {mass, first, second};
}

double cell_lower(const std::vector<double>& t, std::size_t k) {
  return k == 0 ? -INFINITY : t[k - 1];
}
double cell_upper(const std::vector<double>& t, std::size_t k) {
  return k == t.size() ? INFINITY : t[k];
}

void set_midpoint_thresholds(Codebook& cb) {
  cb.thresholds.resize(cb.levels.size() - 1);
  for (std::size_t k = 0; k + 1 < cb.levels.size(); ++k)
    cb.thresholds[k] = 0.5 * (cb.levels[k] + cb.levels[k + 1]);
}

double codebook_distortion(const Codebook& cb) {
  double d = 0.0;
  for (std::size_t k = 0; k < cb.levels.size(); ++k) {
    const auto m = moments(cell_lower(cb.thresholds, k), cell_upper(cb.thresholds, k));
    const double y = cb.levels[k];
    d += m.second - 2.0 * y * m.first + y * y * m.mass;
  }
  return d;
}

Codebook build_codebook(int bits) {
  Codebook cb;
  cb.bits = bits;
  const std::size_t count = std::size_t{1} << bits;
  cb.levels.resize(count);
  // Compander start: optimal high-resolution point density is N(0, 3).
  for (std::size_t k = 0; k < count; ++k)
    cb.levels[k] = std::sqrt(3.0) * normal::quantile((static_cast<double>(k) + 0.5) / static_cast<double>(count));
  set_midpoint_thresholds(cb);

  if (bits <= kMaxLloydBits) {
    for (cb.iterations = 1; cb.iterations <= kLloydMaxIterations; ++cb.iterations) {
      double shift = 0.0;
      for (std::size_t k = 0; k < count; ++k) {
        const auto m = moments(cell_lower(cb.thresholds, k), cell_upper(cb.thresholds, k));
        if (m.mass <= 0.0) continue;
        const double centroid = m.first / m.mass;
        shift = std::max(shift, std::abs(centroid - cb.levels[k]));
        cb.levels[k] = centroid;
      }
      set_midpoint_thresholds(cb);
      if (shift < kLloydTolerance) {
        cb.converged = true;
        break;
      }
    }
    cb.iterations = std::min(cb.iterations, kLloydMaxIterations);
  }
  cb.distortion = codebook_distortion(cb);
  return cb;
}

}  // namespace

const Codebook& lloyd_max_codebook(int bits) {
  if (bits < 1 || bits > kMaxCodebookBits)
    throw std::invalid_argument("codebook bits must be in [1, " + std::to_string(kMaxCodebookBits) + "], got " +
                                std::to_string(bits));
  static std::array<std::once_flag, kMaxCodebookBits + 1> once;
  static std::array<std::unique_ptr<Codebook>, kMaxCodebookBits + 1> cache;
  std::call_once(once[bits], [bits] { cache[bits] = std::make_unique<Codebook>(build_codebook(bits)); });
  return *cache[bits];
}

double distortion_factor(int bits) {
  if (bits < 1) throw std::invalid_argument("bits must be >= 1, got " + std::to_string(bits));
  if (bits == 1) return 1.0 - 2.0 / std::numbers::pi;
  if (bits > kMaxCodebookBits) {
    // Panter-Dite high-resolution limit
    return std::sqrt(3.0) * std::numbers::pi / 2.0 * std::pow(4.0, -bits);
  }
  return lloyd_max_codebook(bits).distortion;
}

QuantizerSpec QuantizerSpec::for_bits(int bits) { return {bits, distortion_factor(bits)}; }

double quantize_real(double x, int bits) {
  if (bits == 1) return x >= 0.0 ? 1.0 : -1.0;
  const auto& cb = lloyd_max_codebook(bits);
  const auto it = std::upper_bound(cb.thresholds.begin(), cb.thresholds.end(), x);
  return cb.levels[static_cast<std::size_t>(it - cb.thresholds.begin())];
}

Eigen::VectorXcd quantize(const Eigen::VectorXcd& y, const QuantizerSpec& spec) {
  if (spec.bits < 1) throw std::invalid_argument("quantizer bits must be >= 1");
  Eigen::VectorXcd r(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i)
    r[i] = {quantize_real(y[i].real(), spec.bits), quantize_real(y[i].imag(), spec.bits)};
  return r;
}

namespace {
void check_rate_args(const Eigen::VectorXcd& h, double signal_var, double noise_var, double rho) {
  if (!h.allFinite()) throw std::invalid_argument("channel has non-finite entries");
  if (!(noise_var > 0.0)) throw std::invalid_argument("noise_var must be positive");
  if (!(signal_var >= 0.0)) throw std::invalid_argument("signal_var must be non-negative");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
}
}  // namespace

double achievable_rate(const Eigen::VectorXcd& h, double signal_var, double noise_var, double rho) {
  check_rate_args(h, signal_var, noise_var, rho);
  double snr = 0.0;
  for (Eigen::Index m = 0; m < h.size(); ++m) {
    const double g = std::norm(h[m]);
    snr += g / (noise_var + rho * signal_var * g);
  }
  return std::log2(1.0 + (1.0 - rho) * signal_var * snr);
}

double low_snr_rate_proxy(const Eigen::VectorXcd& h, double signal_var, double noise_var, double rho) {
  check_rate_args(h, signal_var, noise_var, rho);
  return signal_var * (1.0 - rho) * h.squaredNorm() / noise_var;
}

}  // namespace irsq
