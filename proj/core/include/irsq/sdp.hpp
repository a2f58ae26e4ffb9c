// Solver for the unit-diagonal semidefinite program
//
//     maximize   Re tr(C U)
//     subject to U >= 0,  U_ii = 1,
//
// with Hermitian C. The iterate is kept in factored form U = V V^H with unit
// rows v_i in C^p and updated row by row: with every other row frozen the
// objective is 2 Re <v_i, g_i> + const where g_i = sum_{j != i} C_ij v_j, so
// v_i <- g_i / |g_i| is the exact block maximizer (a projected gradient step
// with the optimal step length). Each sweep is monotone.
//
// Optimality is certified through the dual program min sum(y) s.t.
// Diag(y) - C >= 0. At a stationary point y_i = Re (C U)_ii; shifting y by the
// most negative eigenvalue of Diag(y) - C gives a dual-feasible point, hence a
// valid upper bound on the SDP value.

#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "irsq/errors.hpp"

namespace irsq {

struct SdpOptions {
  int max_sweeps = 20000;
  double tolerance = 1e-9;  // on the certified gap, relative to max(1, |value|)
  int restarts = 10;
  int rank = 0;             // factor width p; 0 picks ceil(sqrt(2 n))
  std::uint64_t seed = 0x5d9f3a1c2b7e4d01ULL;
};

struct SdpResult {
  Eigen::MatrixXcd U;
  double value = 0.0;       // Re tr(C U)
  double dual_bound = 0.0;  // certified upper bound on the optimum
  double gap = 0.0;         // dual_bound - value
  int sweeps = 0;
  int restart = 0;
  int rank = 0;
};

class SdpNotConverged : public NumericalError {
 public:
  SdpNotConverged(const std::string& what, SdpResult best) : NumericalError(what), best_(std::move(best)) {}
  [[nodiscard]] const SdpResult& best() const { return best_; }

 private:
  SdpResult best_;
};

/// Throws std::invalid_argument for a non-square or non-Hermitian C and
/// SdpNotConverged when no restart reaches the gap tolerance.
SdpResult solve_unit_diagonal_sdp(const Eigen::MatrixXcd& C, const SdpOptions& opts = {});

/// Dual certificate for an arbitrary feasible U: returns the certified upper
/// bound sum(y) + n * max(0, -lambda_min(Diag(y) - C)) with y_i = Re (C U)_ii.
double certified_upper_bound(const Eigen::MatrixXcd& C, const Eigen::MatrixXcd& U);

}  // namespace irsq
