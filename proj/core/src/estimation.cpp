#include "irsq/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "irsq/normal.hpp"
#include "irsq/quantization.hpp"

namespace irsq {
namespace {

constexpr double kModulusTolerance = 1e-12;

EstimationResult from_real(const Eigen::VectorXd& h_real) {
  EstimationResult out;
  out.h_real = h_real;
  out.h_hat = complex_unstack(h_real);
  return out;
}

}  // namespace

void PilotFrame::validate() const {
  if (symbols.size() < 1) throw std::invalid_argument("pilot frame needs at least one symbol");
  const double modulus = std::abs(symbols[0]);
  if (!(modulus > 0.0)) throw std::invalid_argument("pilot symbols must be non-zero");
  for (Eigen::Index t = 0; t < symbols.size(); ++t)
    if (std::abs(std::abs(symbols[t]) - modulus) > kModulusTolerance * std::max(1.0, modulus))
      throw std::invalid_argument("pilot symbols must have constant modulus");
  if (phase == PilotPhase::Reflect) {
    if (irs_pattern.empty()) throw std::invalid_argument("Phase II frame needs at least one surface pattern");
    const int n = irs_pattern.front().size();
    for (const auto& p : irs_pattern)
      if (p.size() != n) throw std::invalid_argument("surface patterns differ in length");
  }
}

PilotFrame gen_pilots(int tau, Rng& rng) {
  if (tau < 1) throw std::invalid_argument("tau must be >= 1");
  std::uniform_real_distribution<double> offset(0.0, 2.0 * std::numbers::pi);
  const double phi0 = offset(rng);
  PilotFrame frame;
  frame.symbols.resize(tau);
  for (int t = 0; t < tau; ++t) frame.symbols[t] = std::polar(1.0, phi0 + 2.0 * std::numbers::pi * t / tau);
  return frame;
}

std::vector<PhaseVector> dft_patterns(int elements) {
  if (elements < 1) throw std::invalid_argument("DFT patterns need elements >= 1");
  std::vector<PhaseVector> patterns;
  patterns.reserve(static_cast<std::size_t>(elements));
  for (int s = 0; s < elements; ++s) {
    Eigen::VectorXd theta(elements);
    for (int n = 0; n < elements; ++n)
      theta[n] = -2.0 * std::numbers::pi * static_cast<double>((s * n) % elements) / elements;
    patterns.emplace_back(std::move(theta));
  }
  return patterns;
}

PilotFrame gen_reflect_pilots(int tau, int elements, Rng& rng) {
  PilotFrame frame = gen_pilots(tau, rng);
  frame.phase = PilotPhase::Reflect;
  frame.irs_pattern = dft_patterns(elements);
  return frame;
}

int RealizedPilotSystem::slot_of_row(Eigen::Index i) const {
  const Eigen::Index complex_rows = rows() / 2;
  const Eigen::Index k = i % complex_rows;
  return static_cast<int>((k / antennas) % tau);
}

Eigen::MatrixXcd pilot_regressor(const PilotFrame& frame, int antennas) {
  frame.validate();
  if (antennas < 1) throw std::invalid_argument("antennas must be >= 1");
  const int tau = frame.tau();
  const int m_count = antennas;
  if (frame.phase == PilotPhase::Direct) {
    // a (x) I_M
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(tau * m_count, m_count);
    for (int t = 0; t < tau; ++t)
      for (int m = 0; m < m_count; ++m) A(t * m_count + m, m) = frame.symbols[t];
    return A;
  }
  const int subframes = frame.subframes();
  const int n_count = frame.irs_pattern.front().size();
  // rows (s, t, m); columns vec index n * M + m
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(subframes * tau * m_count, n_count * m_count);
  for (int s = 0; s < subframes; ++s) {
    const Eigen::VectorXcd& u = frame.irs_pattern[static_cast<std::size_t>(s)].unit();
    for (int t = 0; t < tau; ++t)
      for (int n = 0; n < n_count; ++n)
        for (int m = 0; m < m_count; ++m)
          A((s * tau + t) * m_count + m, n * m_count + m) = frame.symbols[t] * u[n];
  }
  return A;
}

Eigen::MatrixXd real_stack(const Eigen::MatrixXcd& A) {
  const Eigen::Index r = A.rows();
  const Eigen::Index c = A.cols();
  Eigen::MatrixXd out(2 * r, 2 * c);
  out.topLeftCorner(r, c) = A.real();
  out.topRightCorner(r, c) = -A.imag();
  out.bottomLeftCorner(r, c) = A.imag();
  out.bottomRightCorner(r, c) = A.real();
  return out;
}

Eigen::VectorXd real_stack(const Eigen::VectorXcd& v) {
  Eigen::VectorXd out(2 * v.size());
  out << v.real(), v.imag();
  return out;
}

Eigen::VectorXcd complex_unstack(const Eigen::VectorXd& v) {
  if (v.size() % 2 != 0) throw std::invalid_argument("real-stacked vector must have even length");
  const Eigen::Index n = v.size() / 2;
  Eigen::VectorXcd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = {v[i], v[n + i]};
  return out;
}

Eigen::VectorXcd cascade_vector(const ChannelSet& ch) {
  const Eigen::MatrixXcd H = cascade_matrix(ch);
  return Eigen::Map<const Eigen::VectorXcd>(H.data(), H.size());
}

RealizedPilotSystem realize_system(const ChannelSet& ch, const PilotFrame& frame, double noise_var,
                                   std::optional<double> sigma_e2, Rng& rng,
                                   const std::optional<Eigen::VectorXcd>& direct_residual) {
  ch.validate();
  frame.validate();
  if (!(noise_var > 0.0)) throw std::invalid_argument("noise_var must be positive");
  const int m_count = ch.antennas();

  RealizedPilotSystem sys;
  sys.phase = frame.phase;
  sys.antennas = m_count;
  sys.tau = frame.tau();
  sys.subframes = frame.subframes();
  sys.noise_var = noise_var / 2.0;

  const Eigen::MatrixXcd A = pilot_regressor(frame, m_count);
  Eigen::VectorXcd h;
  Eigen::VectorXcd y;
  if (frame.phase == PilotPhase::Direct) {
    sys.elements = 1;
    h = ch.direct;
    y = A * h;
  } else {
    if (ch.elements() == 0) throw std::invalid_argument("Phase II needs a reflecting surface (N = 0)");
    if (frame.irs_pattern.front().size() != ch.elements())
      throw std::invalid_argument("surface pattern length does not match N");
    if (!sigma_e2.has_value() || !(*sigma_e2 >= 0.0) || !std::isfinite(*sigma_e2))
      throw std::invalid_argument("Phase II needs a finite sigma_e2 >= 0");
    sys.elements = ch.elements();
    h = cascade_vector(ch);
    sys.residual_var = *sigma_e2 / (2.0 * m_count);

    // a_all (x) I_M across sub-frames
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(A.rows(), m_count);
    for (int s = 0; s < sys.subframes; ++s)
      for (int t = 0; t < sys.tau; ++t)
        for (int m = 0; m < m_count; ++m) B((s * sys.tau + t) * m_count + m, m) = frame.symbols[t];
    sys.residual_regressor = real_stack(B);

    Eigen::VectorXcd residual;
    if (direct_residual.has_value()) {
      if (direct_residual->size() != m_count) throw std::invalid_argument("direct residual must have length M");
      residual = *direct_residual;
    } else {
      residual = complex_normal_vector(rng, m_count, *sigma_e2 / m_count);
    }
    y = A * h + B * residual;
  }
  y += complex_normal_vector(rng, static_cast<int>(y.size()), noise_var);

  sys.regressor = real_stack(A);
  sys.truth = real_stack(h);
  const Eigen::VectorXcd r = quantize(y, QuantizerSpec::for_bits(1));
  sys.signs = real_stack(r);
  sys.refined = sys.signs.asDiagonal() * sys.regressor;
  sys.noise_std.resize(sys.rows());
  for (Eigen::Index i = 0; i < sys.rows(); ++i) {
    const double a2 = std::norm(frame.symbols[sys.slot_of_row(i)]);
    sys.noise_std[i] = std::sqrt(a2 * sys.residual_var + sys.noise_var);
  }
  return sys;
}

FisherInfo fisher_matrix_rows(const Eigen::MatrixXd& regressor, const Eigen::VectorXd& h_real,
                              const Eigen::VectorXd& row_std, double error_scale) {
  if (regressor.cols() != h_real.size() || regressor.rows() != row_std.size())
    throw std::invalid_argument("fisher_matrix: dimension mismatch");
  const Eigen::Index d = regressor.cols();
  Eigen::VectorXd weight(regressor.rows());
  for (Eigen::Index i = 0; i < regressor.rows(); ++i) {
    const double z = regressor.row(i).dot(h_real) / row_std[i];
    weight[i] = probit_fisher_weight(z) / (row_std[i] * row_std[i]);
  }
  FisherInfo info;
  info.J = regressor.transpose() * weight.asDiagonal() * regressor;
  info.J = 0.5 * (info.J + info.J.transpose()).eval();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info.J, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double top = d > 0 ? lambda.maxCoeff() : 0.0;
  info.invertible = d > 0 && lambda.minCoeff() > 1e-300 && lambda.minCoeff() > top * 1e-15;
  if (info.invertible) {
    info.crlb_trace = lambda.cwiseInverse().sum();
  } else {
    info.crlb_trace = INFINITY;
  }
  info.sigma_e2 = error_scale * info.crlb_trace;
  return info;
}

FisherInfo fisher_matrix(const Eigen::MatrixXd& regressor, const Eigen::VectorXd& h_real, double noise_var,
                         double error_scale) {
  if (!(noise_var > 0.0)) throw std::invalid_argument("noise_var must be positive");
  const Eigen::VectorXd row_std = Eigen::VectorXd::Constant(regressor.rows(), std::sqrt(noise_var / 2.0));
  return fisher_matrix_rows(regressor, h_real, row_std, error_scale);
}

EstimationResult ml_direct(const RealizedPilotSystem& sys, const MlOptions& opts) {
  if (sys.phase != PilotPhase::Direct) throw std::invalid_argument("ml_direct expects a Phase I system");
  ProbitOptions probit = opts.probit;
  const ProbitFit fit = maximize_probit(sys.refined, sys.noise_std, probit, opts.start);
  EstimationResult out = from_real(fit.h);
  out.iterations = fit.iterations;
  out.converged = fit.converged && !fit.diverged;
  out.separable = fit.separable;
  out.final_grad_norm = fit.grad_norm;
  out.log_likelihood = fit.value;
  out.history = fit.history;
  return out;
}

EstimationResult ml_reflect(const RealizedPilotSystem& sys, const MlOptions& opts) {
  if (sys.phase != PilotPhase::Reflect) throw std::invalid_argument("ml_reflect expects a Phase II system");
  ProbitOptions probit = opts.probit;
  probit.rel_change_tol = opts.reflect_rel_tol;
  if (opts.reflect_fixed_step) {
    // 1 / Lipschitz bound of grad L: -d^2/dz^2 log Phi(z) <= 1
    const Eigen::MatrixXd scaled = sys.noise_std.cwiseInverse().asDiagonal() * sys.regressor;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled.transpose() * scaled, Eigen::EigenvaluesOnly);
    probit.adaptive_step = false;
    probit.step_init = 1.0 / eig.eigenvalues().maxCoeff();
  }
  const ProbitFit fit = maximize_probit(sys.refined, sys.noise_std, probit, opts.start);
  EstimationResult out = from_real(fit.h);
  out.iterations = fit.iterations;
  out.converged = fit.converged && !fit.diverged;
  out.separable = fit.separable;
  out.final_grad_norm = fit.grad_norm;
  out.log_likelihood = fit.value;
  out.history = fit.history;
  return out;
}

EstimationResult ls_estimate(const RealizedPilotSystem& sys) {
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.regressor);
  if (qr.rank() < sys.dim())
    throw std::invalid_argument("LS regressor is rank deficient: rank " + std::to_string(qr.rank()) + " < dimension " +
                                std::to_string(sys.dim()));
  const Eigen::VectorXd target = std::sqrt(std::numbers::pi / 2.0) * sys.noise_std.cwiseProduct(sys.signs);
  EstimationResult out = from_real(qr.solve(target));
  out.converged = true;
  return out;
}

LmmseCovariances lmmse_covariances(const RealizedPilotSystem& sys, double channel_prior_var) {
  if (!(channel_prior_var > 0.0)) throw std::invalid_argument("channel prior variance must be positive");
  const double half_var = channel_prior_var / 2.0;
  const Eigen::MatrixXd& A = sys.regressor;
  Eigen::MatrixXd Cyy = half_var * A * A.transpose();
  if (sys.residual_regressor.size() > 0 && sys.residual_var > 0.0)
    Cyy += sys.residual_var * sys.residual_regressor * sys.residual_regressor.transpose();
  Cyy.diagonal().array() += sys.noise_var;

  const Eigen::VectorXd inv_sd = Cyy.diagonal().cwiseSqrt().cwiseInverse();
  LmmseCovariances cov;
  cov.C_rr.resize(Cyy.rows(), Cyy.cols());
  for (Eigen::Index j = 0; j < Cyy.cols(); ++j)
    for (Eigen::Index i = 0; i < Cyy.rows(); ++i) {
      const double corr = std::clamp(Cyy(i, j) * inv_sd[i] * inv_sd[j], -1.0, 1.0);
      cov.C_rr(i, j) = 2.0 / std::numbers::pi * std::asin(corr);
    }
  cov.C_hr = std::sqrt(2.0 / std::numbers::pi) * half_var * A.transpose() * inv_sd.asDiagonal();
  return cov;
}

EstimationResult lmmse_estimate(const RealizedPilotSystem& sys, double channel_prior_var) {
  LmmseCovariances cov = lmmse_covariances(sys, channel_prior_var);
  bool ridge = false;
  Eigen::LLT<Eigen::MatrixXd> llt(cov.C_rr);
  if (llt.info() != Eigen::Success) {
    cov.C_rr.diagonal().array() += 1e-10;
    llt.compute(cov.C_rr);
    ridge = true;
    if (llt.info() != Eigen::Success) throw std::invalid_argument("LMMSE sign covariance is singular");
  }
  EstimationResult out = from_real(cov.C_hr * llt.solve(sys.signs));
  out.converged = true;
  out.regularized = ridge;
  return out;
}

double nmse(const Eigen::VectorXcd& h_hat, const Eigen::VectorXcd& h_true) {
  if (h_hat.size() != h_true.size()) throw std::invalid_argument("nmse: dimension mismatch");
  const double energy = h_true.squaredNorm();
  if (!(energy > 0.0)) throw std::invalid_argument("nmse: true channel is zero");
  return (h_hat - h_true).squaredNorm() / energy;
}

}  // namespace irsq
