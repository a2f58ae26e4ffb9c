#include "irsq/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace irsq {
namespace {

constexpr int kCertifyEvery = 10;

void check_hermitian(const Eigen::MatrixXcd& C) {
  if (C.rows() != C.cols() || C.rows() == 0) throw std::invalid_argument("SDP cost must be square and non-empty");
  if (!C.allFinite()) throw std::invalid_argument("SDP cost has non-finite entries");
  const double scale = std::max(1.0, C.cwiseAbs().maxCoeff());
  if ((C - C.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("SDP cost must be Hermitian");
}

Eigen::MatrixXcd random_unit_rows(Eigen::Index n, Eigen::Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> dist;
  Eigen::MatrixXcd V(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) {
      const double re = dist(rng);
      const double im = dist(rng);
      V(i, k) = {re, im};
    }
    V.row(i).normalize();
  }
  return V;
}

double objective(const Eigen::MatrixXcd& C, const Eigen::MatrixXcd& V) {
  return (V.adjoint() * C * V).trace().real();
}

struct Certificate {
  double value;
  double bound;
};

Certificate certify(const Eigen::MatrixXcd& C, const Eigen::MatrixXcd& V) {
  const Eigen::MatrixXcd CV = C * V;
  const Eigen::Index n = C.rows();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = CV.row(i).dot(V.row(i)).real();
  // Eigen's dot conjugates the first argument: sum_k conj(CV_ik) V_ik, whose
  // real part equals Re (C V V^H)_ii.
  Eigen::MatrixXcd S = -C;
  S.diagonal() += y.cast<std::complex<double>>();
  const double lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(S, Eigen::EigenvaluesOnly).eigenvalues()[0];
  return {y.sum(), y.sum() + static_cast<double>(n) * std::max(0.0, -lambda_min)};
}

}  // namespace

double certified_upper_bound(const Eigen::MatrixXcd& C, const Eigen::MatrixXcd& U) {
  check_hermitian(C);
  if (U.rows() != C.rows() || U.cols() != C.cols()) throw std::invalid_argument("U and C differ in size");
  Eigen::MatrixXcd S = -C;
  const Eigen::MatrixXcd CU = C * U;
  for (Eigen::Index i = 0; i < C.rows(); ++i) S(i, i) += CU(i, i).real();
  const double lambda_min = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(S, Eigen::EigenvaluesOnly).eigenvalues()[0];
  return CU.trace().real() + static_cast<double>(C.rows()) * std::max(0.0, -lambda_min);
}

SdpResult solve_unit_diagonal_sdp(const Eigen::MatrixXcd& C, const SdpOptions& opts) {
  check_hermitian(C);
  if (opts.max_sweeps < 1 || opts.restarts < 1 || !(opts.tolerance > 0.0))
    throw std::invalid_argument("SDP options must be positive");
  const Eigen::Index n = C.rows();
  const Eigen::Index p =
      opts.rank > 0 ? std::min<Eigen::Index>(opts.rank, n)
                    : std::min<Eigen::Index>(n, static_cast<Eigen::Index>(std::ceil(std::sqrt(2.0 * static_cast<double>(n)))));

  std::mt19937_64 rng(opts.seed);
  SdpResult best;
  best.gap = INFINITY;

  for (int restart = 0; restart < opts.restarts; ++restart) {
    Eigen::MatrixXcd V = random_unit_rows(n, p, rng);
    double value = objective(C, V);
    Certificate cert{value, INFINITY};
    int sweep = 0;
    while (sweep < opts.max_sweeps) {
      for (int inner = 0; inner < kCertifyEvery && sweep < opts.max_sweeps; ++inner, ++sweep) {
        for (Eigen::Index i = 0; i < n; ++i) {
          Eigen::RowVectorXcd g = C.row(i) * V - C(i, i) * V.row(i);
          const double norm = g.norm();
          if (norm > 0.0) V.row(i) = g / norm;
        }
      }
      cert = certify(C, V);
      value = cert.value;
      if (cert.bound - value <= opts.tolerance * std::max(1.0, std::abs(value))) break;
    }
    const double gap = cert.bound - value;
    if (gap < best.gap || (gap == best.gap && value > best.value)) {
      best.U = V * V.adjoint();
      best.value = value;
      best.dual_bound = cert.bound;
      best.gap = gap;
      best.sweeps = sweep;
      best.restart = restart;
      best.rank = static_cast<int>(p);
    }
    if (gap <= opts.tolerance * std::max(1.0, std::abs(value))) return best;
  }
  throw SdpNotConverged("SDP gap " + std::to_string(best.gap) + " above tolerance after " +
                            std::to_string(opts.restarts) + " restarts",
                        best);
}

}  // namespace irsq
