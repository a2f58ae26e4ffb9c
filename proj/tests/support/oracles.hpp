// Independent reference computations used by the tests. None of these call
// into the code they check.

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace irsq::oracle {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double gauss_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

/// Composite Simpson rule on [a, b] with `intervals` (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals = 20000) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// E[(x - Q(x))^2] for x ~ N(0,1) and the quantizer given by levels and
/// thresholds, by quadrature over each cell (tails cut at +-12).
inline double quantizer_mse(const std::vector<double>& levels, const std::vector<double>& thresholds) {
  double total = 0.0;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    const double lo = k == 0 ? -12.0 : thresholds[k - 1];
    const double hi = k + 1 == levels.size() ? 12.0 : thresholds[k];
    const double q = levels[k];
    total += simpson([q](double x) { return (x - q) * (x - q) * gauss_pdf(x); }, lo, hi, 4000);
  }
  return total;
}

/// Plain Lloyd iteration with quadrature centroids, started from a uniform
/// grid; a slow but independent route to the same fixed point.
inline std::vector<double> lloyd_levels(int bits, int iterations) {
  const int L = 1 << bits;
  std::vector<double> q(L);
  for (int k = 0; k < L; ++k) q[k] = -2.0 + 4.0 * (k + 0.5) / L;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> t(L - 1);
    for (int k = 0; k + 1 < L; ++k) t[k] = 0.5 * (q[k] + q[k + 1]);
    for (int k = 0; k < L; ++k) {
      const double lo = k == 0 ? -12.0 : t[k - 1];
      const double hi = k + 1 == L ? 12.0 : t[k];
      const double mass = simpson(gauss_pdf, lo, hi, 2000);
      const double first = simpson([](double x) { return x * gauss_pdf(x); }, lo, hi, 2000);
      q[k] = first / mass;
    }
  }
  return q;
}

inline std::vector<double> midpoints(const std::vector<double>& q) {
  std::vector<double> t;
  for (std::size_t k = 0; k + 1 < q.size(); ++k) t.push_back(0.5 * (q[k] + q[k + 1]));
  return t;
}

/// log2 |I + (1-rho) sigma_x^2 D^{-1} h h^H| with D = sigma_w^2 I + rho sigma_x^2 diag(|h|^2),
/// evaluated as a dense determinant.
inline double determinant_rate(const Eigen::VectorXcd& h, double sx, double sw, double rho) {
  const Eigen::Index m = h.size();
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) D(i, i) = sw + rho * sx * std::norm(h[i]);
  const Eigen::MatrixXcd T = Eigen::MatrixXcd::Identity(m, m) + (1.0 - rho) * sx * D.inverse() * h * h.adjoint();
  return std::log2(std::abs(T.fullPivLu().determinant()));
}

/// G diag(u) h_r + h_d by explicit loops.
inline Eigen::VectorXcd composite_by_loops(const Eigen::VectorXcd& hd, const Eigen::VectorXcd& hr,
                                           const Eigen::MatrixXcd& G, const Eigen::VectorXcd& u) {
  Eigen::VectorXcd out = hd;
  for (Eigen::Index m = 0; m < G.rows(); ++m)
    for (Eigen::Index n = 0; n < G.cols(); ++n) out[m] += G(m, n) * u[n] * hr[n];
  return out;
}

/// Central difference of a scalar function of a real vector.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    up[i] += step;
    down[i] -= step;
    g[i] = (f(up) - f(down)) / (2.0 * step);
  }
  return g;
}

/// Normal CDF via erfc, independent of the library's implementation.
inline double gauss_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace irsq::oracle
