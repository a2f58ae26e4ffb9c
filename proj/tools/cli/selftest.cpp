#include "selftest.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "irsq/beamforming.hpp"
#include "irsq/channel_model.hpp"
#include "irsq/quantization.hpp"

namespace irsq::cli {
namespace {

CheckResult gradient_check(Rng& rng) {
  CheckResult r{"gradient vs central differences", 0, 0, 0.0};
  std::uniform_int_distribution<int> dim(1, 8);
  for (int k = 0; k < 50; ++k) {
    SystemConfig cfg;
    cfg.antennas = dim(rng);
    cfg.elements = dim(rng);
    const ChannelSet ch = gen_channels(cfg, rng);
    const PhaseVector theta = random_phases(cfg.elements, rng);
    const double noise = 0.5;
    const double rho = distortion_factor(1 + k % 4);
    const Eigen::VectorXd g = rate_gradient(ch, theta, noise, rho);
    const double h = 1e-6;
    double err = 0.0;
    for (int n = 0; n < cfg.elements; ++n) {
      Eigen::VectorXd up = theta.theta();
      Eigen::VectorXd down = theta.theta();
      up[n] += h;
      down[n] -= h;
      const double fd = (rate_objective(ch, PhaseVector(up), noise, rho) - rate_objective(ch, PhaseVector(down), noise, rho)) / (2 * h);
      err = std::max(err, std::abs(fd - g[n]) / std::max(1.0, g.cwiseAbs().maxCoeff()));
    }
    r.worst = std::max(r.worst, err);
    ++r.total;
    if (err < 1e-5) ++r.passed;
  }
  return r;
}

CheckResult homogenization_check(Rng& rng) {
  CheckResult r{"homogenization consistency", 0, 0, 0.0};
  std::uniform_int_distribution<int> dim(1, 8);
  std::uniform_real_distribution<double> angle(0.0, 6.283185307179586);
  for (int k = 0; k < 200; ++k) {
    SystemConfig cfg;
    cfg.antennas = dim(rng);
    cfg.elements = dim(rng);
    const ChannelSet ch = gen_channels(cfg, rng);
    const double noise = 0.3;
    const HomogenizedObjective obj = homogenize(ch, noise);
    const PhaseVector u = random_phases(cfg.elements, rng);
    const Complex t = std::polar(1.0, angle(rng));
    Eigen::VectorXcd ubar(cfg.elements + 1);
    ubar << u.unit(), t;
    const double lifted = (ubar.adjoint() * obj.C * ubar)(0, 0).real() + obj.const_term;
    const double direct = objective_trace(ch, PhaseVector::from_complex(u.unit() * std::conj(t)), noise);
    const double err = std::abs(lifted - direct) / std::max(1.0, std::abs(direct));
    r.worst = std::max(r.worst, err);
    ++r.total;
    if (err < 1e-10) ++r.passed;
  }
  return r;
}

CheckResult determinant_check(Rng& rng) {
  CheckResult r{"determinant form of the rate", 0, 0, 0.0};
  std::uniform_int_distribution<int> dim(1, 16);
  std::uniform_real_distribution<double> level(0.05, 4.0);
  for (int k = 0; k < 200; ++k) {
    const int m = dim(rng);
    const Eigen::VectorXcd h = complex_normal_vector(rng, m, level(rng));
    const double sx = level(rng);
    const double sw = level(rng);
    const double rho = distortion_factor(1 + k % 6);
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(m, m);
    for (int i = 0; i < m; ++i) D(i, i) = sw + rho * sx * std::norm(h[i]);
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(m, m);
    const Eigen::MatrixXcd T = I + (1.0 - rho) * sx * D.inverse() * h * h.adjoint();
    const double det_form = std::log2(std::abs(T.determinant()));
    const double err = std::abs(det_form - achievable_rate(h, sx, sw, rho));
    r.worst = std::max(r.worst, err);
    ++r.total;
    if (err < 1e-10) ++r.passed;
  }
  return r;
}

}  // namespace

std::vector<CheckResult> run_selftest(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  out.push_back(gradient_check(rng));
  out.push_back(homogenization_check(rng));
  out.push_back(determinant_check(rng));
  return out;
}

}  // namespace irsq::cli
