#include "irsq/channel_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace irsq {

void SystemConfig::validate() const {
  if (antennas < 1) throw std::invalid_argument("antennas must be >= 1");
  if (elements < 0) throw std::invalid_argument("elements must be >= 0");
  if (pilot_length < 1) throw std::invalid_argument("pilot_length must be >= 1");
  if (!(noise_var > 0.0) || !std::isfinite(noise_var))
    throw std::invalid_argument("noise_var must be positive and finite");
  if (!(signal_var > 0.0) || !std::isfinite(signal_var))
    throw std::invalid_argument("signal_var must be positive and finite");
  if (bits < 1) throw std::invalid_argument("bits must be >= 1");
}

double noise_var_from_snr_db(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

void ChannelSet::validate() const {
  if (reflect.rows() != direct.size() || reflect.cols() != incident.size()) {
    throw std::invalid_argument("malformed ChannelSet: G is " + std::to_string(reflect.rows()) + "x" +
                                std::to_string(reflect.cols()) + ", expected " +
                                std::to_string(direct.size()) + "x" + std::to_string(incident.size()));
  }
  if (!direct.allFinite() || !incident.allFinite() || !reflect.allFinite())
    throw std::invalid_argument("malformed ChannelSet: non-finite entry");
}

double wrap_phase(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta, two_pi);
  if (r < 0.0) r += two_pi;
  // fmod of a tiny negative value can round up to exactly 2*pi
  if (r >= two_pi) r = 0.0;
  return r;
}

PhaseVector::PhaseVector(Eigen::VectorXd theta) : theta_(std::move(theta)), unit_(theta_.size()) {
  for (Eigen::Index n = 0; n < theta_.size(); ++n) {
    if (!std::isfinite(theta_[n])) throw std::invalid_argument("non-finite phase");
    theta_[n] = wrap_phase(theta_[n]);
    unit_[n] = std::polar(1.0, theta_[n]);
  }
}

PhaseVector PhaseVector::zeros(int n) { return PhaseVector(Eigen::VectorXd::Zero(n)); }

PhaseVector PhaseVector::from_complex(const Eigen::VectorXcd& z) {
  Eigen::VectorXd theta(z.size());
  for (Eigen::Index n = 0; n < z.size(); ++n) theta[n] = z[n] == Complex{} ? 0.0 : std::arg(z[n]);
  return PhaseVector(std::move(theta));
}

Complex complex_normal(Rng& rng, double variance) {
  std::normal_distribution<double> dist(0.0, std::sqrt(variance / 2.0));
  const double re = dist(rng);
  const double im = dist(rng);
  return {re, im};
}

Eigen::VectorXcd complex_normal_vector(Rng& rng, int n, double variance) {
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v[i] = complex_normal(rng, variance);
  return v;
}

ChannelSet gen_channels(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  ChannelSet ch;
  ch.direct = complex_normal_vector(rng, cfg.antennas);
  ch.incident = complex_normal_vector(rng, cfg.elements);
  ch.reflect.resize(cfg.antennas, cfg.elements);
  // column-major fill keeps the draw order independent of Eigen internals
  for (int n = 0; n < cfg.elements; ++n)
    for (int m = 0; m < cfg.antennas; ++m) ch.reflect(m, n) = complex_normal(rng);
  return ch;
}

Eigen::VectorXcd composite_channel(const ChannelSet& ch, const IrsState& irs) {
  ch.validate();
  if (std::holds_alternative<IrsOff>(irs)) return ch.direct;
  const auto& phases = std::get<PhaseVector>(irs);
  if (phases.size() != ch.elements())
    throw std::invalid_argument("malformed ChannelSet: phase vector length " + std::to_string(phases.size()) +
                                " != elements " + std::to_string(ch.elements()));
  return ch.reflect * ch.incident.cwiseProduct(phases.unit()) + ch.direct;
}

Eigen::MatrixXcd cascade_matrix(const ChannelSet& ch) {
  ch.validate();
  if (ch.elements() == 0) throw std::invalid_argument("no reflecting channel");
  return ch.reflect * ch.incident.asDiagonal();
}

}  // namespace irsq
