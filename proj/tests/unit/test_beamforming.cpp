#include <doctest.h>

#include <cmath>
#include <random>

#include "irsq/beamforming.hpp"
#include "irsq/quantization.hpp"
#include "oracles.hpp"

using namespace irsq;

namespace {

ChannelSet instance(int m, int n, std::uint64_t seed) {
  SystemConfig cfg;
  cfg.antennas = m;
  cfg.elements = n;
  Rng rng(seed);
  return gen_channels(cfg, rng);
}

PhaseVector random_theta(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * oracle::kPi);
  Eigen::VectorXd t(n);
  for (auto& v : t) v = u(rng);
  return PhaseVector(t);
}

double linear_term(const ChannelSet& ch, const Eigen::VectorXcd& u) {
  return 2.0 * ch.direct.dot(cascade_matrix(ch) * u).real();
}

}  // namespace

TEST_CASE("trace objective") {
  SUBCASE("no elements") {
    const ChannelSet ch = instance(3, 0, 1);
    CHECK(objective_trace(ch, PhaseVector::zeros(0), 0.5) == doctest::Approx(ch.direct.squaredNorm() / 0.5));
  }
  SUBCASE("equals the composite channel energy") {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 100; ++k) {
      const ChannelSet ch = instance(1 + k % 8, 1 + k % 6, 10 + k);
      const PhaseVector p = random_theta(ch.elements(), rng);
      const double sw = 0.1 + 0.05 * k;
      const double ref = oracle::composite_by_loops(ch.direct, ch.incident, ch.reflect, p.unit()).squaredNorm() / sw;
      CHECK(std::abs(objective_trace(ch, p, sw) - ref) < 1e-10 * std::max(1.0, ref));
    }
  }
  SUBCASE("u and -u agree without a direct path") {
    std::mt19937_64 rng(3);
    ChannelSet ch = instance(4, 5, 4);
    ch.direct.setZero();
    const PhaseVector p = random_theta(5, rng);
    const PhaseVector q((p.theta().array() + oracle::kPi).matrix());
    CHECK(std::abs(objective_trace(ch, p, 1.0) - objective_trace(ch, q, 1.0)) < 1e-12);
  }
}

TEST_CASE("homogenization consistency") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 1000; ++k) {
    const ChannelSet ch = instance(1 + k % 7, 1 + k % 8, 1000 + k);
    const double sw = 0.2 + (k % 13) * 0.3;
    const HomogenizedObjective obj = homogenize(ch, sw);
    CHECK((obj.C - obj.C.adjoint()).norm() == 0.0);
    const PhaseVector p = random_theta(ch.elements(), rng);
    const Complex t = std::polar(1.0, 0.37 * k);
    Eigen::VectorXcd ubar(ch.elements() + 1);
    ubar << p.unit() * t, t;
    const double lifted = (ubar.adjoint() * obj.C * ubar)(0, 0).real() + obj.const_term;
    const double direct = objective_trace(ch, p, sw);
    CHECK(std::abs(lifted - direct) < 1e-10 * std::max(1.0, direct));
  }
}

TEST_CASE("homogenized matrix without direct path is block diagonal") {
  ChannelSet ch = instance(3, 4, 6);
  ch.direct.setZero();
  const HomogenizedObjective obj = homogenize(ch, 1.0);
  CHECK(obj.C.row(4).norm() == 0.0);
  CHECK(obj.C.col(4).norm() == 0.0);
  CHECK_THROWS_AS(homogenize(instance(3, 0, 7), 1.0), std::invalid_argument);
}

TEST_CASE("unit-diagonal SDP") {
  SUBCASE("2x2 closed form") {
    for (int k = 0; k < 50; ++k) {
      const ChannelSet ch = instance(1 + k % 4, 1, 200 + k);
      const HomogenizedObjective obj = homogenize(ch, 1.0);
      const SdpResult r = solve_sdr(obj);
      // U_12 aligns with C_12 so that 2 Re(C_21 U_12) = 2 |C_12|
      const Complex c12 = obj.C(0, 1);
      const double expect = obj.C(0, 0).real() + 2.0 * std::abs(c12);
      CHECK(std::abs(r.value - expect) < 1e-6);
      CHECK(std::abs(r.U(0, 1) - std::polar(1.0, std::arg(c12))) < 1e-6);
    }
  }
  SUBCASE("identity cost") {
    for (int n = 1; n <= 6; ++n) {
      const Eigen::MatrixXcd C = Eigen::MatrixXcd::Identity(n + 1, n + 1);
      const SdpResult r = solve_unit_diagonal_sdp(C);
      CHECK(r.value == doctest::Approx(n + 1).epsilon(1e-12));
      CHECK(r.dual_bound == doctest::Approx(n + 1).epsilon(1e-9));
    }
  }
  SUBCASE("feasible output with certified bound") {
    for (int k = 0; k < 30; ++k) {
      const ChannelSet ch = instance(4, 1 + k % 10, 300 + k);
      const HomogenizedObjective obj = homogenize(ch, 0.5);
      const SdpResult r = solve_sdr(obj);
      const Eigen::Index d = r.U.rows();
      for (Eigen::Index i = 0; i < d; ++i) CHECK(std::abs(r.U(i, i) - 1.0) < 1e-12);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(r.U);
      CHECK(eig.eigenvalues().minCoeff() > -1e-10);
      CHECK(r.gap <= 1e-9 * std::max(1.0, std::abs(r.value)));
      CHECK(certified_upper_bound(obj.C, r.U) >= r.value - 1e-9);
    }
  }
  SUBCASE("relaxation bound dominates the grid optimum") {
    for (int k = 0; k < 20; ++k) {
      const int n = 1 + k % 4;
      const ChannelSet ch = instance(3, n, 400 + k);
      Rng rng(k);
      const SdrSolution s = sdr_beamform(ch, 1.0, 50, rng);
      const OracleResult o = brute_force_oracle(ch, 1.0, 0.0, 16, OracleObjective::LowSnr);
      CHECK(s.upper_bound >= o.value - 1e-6);
      // upper_bound is the primal value, within the certified gap of the optimum
      CHECK(s.rounded_value <= s.upper_bound + 1e-9 * std::max(1.0, s.upper_bound));
      CHECK(s.rounded_value <= s.sdp.dual_bound + homogenize(ch, 1.0).const_term + 1e-12);
    }
  }
  SUBCASE("bad inputs") {
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Identity(3, 3);
    C(0, 1) = Complex(1.0, 0.0);
    CHECK_THROWS_AS(solve_unit_diagonal_sdp(C), std::invalid_argument);
    CHECK_THROWS_AS(solve_unit_diagonal_sdp(Eigen::MatrixXcd::Zero(2, 3)), std::invalid_argument);
  }
  SUBCASE("an iteration budget too small raises with the best iterate") {
    const HomogenizedObjective obj = homogenize(instance(4, 8, 9), 1.0);
    SdpOptions opts;
    opts.max_sweeps = 1;
    opts.tolerance = 1e-15;
    opts.restarts = 1;
    try {
      (void)solve_sdr(obj, opts);
      FAIL("expected SdpNotConverged");
    } catch (const SdpNotConverged& e) {
      CHECK(e.best().U.rows() == 9);
      CHECK(e.best().gap > 0.0);
    }
  }
}

TEST_CASE("randomized rounding") {
  SUBCASE("rank-one input recovers the phases") {
    std::mt19937_64 rng(10);
    for (int k = 0; k < 20; ++k) {
      const int n = 1 + k % 6;
      const HomogenizedObjective obj = homogenize(instance(2, n, 500 + k), 1.0);
      const PhaseVector v = random_theta(n + 1, rng);
      const Eigen::MatrixXcd U = v.unit() * v.unit().adjoint();
      Rng draw(k);
      const PhaseVector u = randomize_round(U, obj, 7, draw);
      for (int i = 0; i < n; ++i) {
        const Complex expect = v.unit()[i] / v.unit()[n];
        CHECK(std::abs(u.unit()[i] - expect) < 1e-9);
      }
    }
  }
  SUBCASE("same seed, same result") {
    const ChannelSet ch = instance(4, 5, 11);
    const HomogenizedObjective obj = homogenize(ch, 1.0);
    const SdpResult r = solve_sdr(obj);
    Rng a(3);
    Rng b(3);
    CHECK(randomize_round(r.U, obj, 200, a).theta() == randomize_round(r.U, obj, 200, b).theta());
  }
  SUBCASE("rejects an indefinite matrix") {
    const HomogenizedObjective obj = homogenize(instance(2, 1, 12), 1.0);
    Eigen::MatrixXcd U(2, 2);
    U << Complex(1, 0), Complex(2, 0), Complex(2, 0), Complex(1, 0);
    Rng rng(1);
    CHECK_THROWS_AS(randomize_round(U, obj, 5, rng), std::invalid_argument);
    CHECK_THROWS_AS(randomize_round(Eigen::MatrixXcd::Identity(2, 2), obj, 0, rng), std::invalid_argument);
  }
}

TEST_CASE("rate objective gradient") {
  SUBCASE("single element without quantization") {
    const ChannelSet ch = instance(3, 1, 13);
    const Eigen::VectorXcd g = ch.reflect.col(0) * ch.incident[0];
    const double sw = 0.7;
    for (double t = -3.0; t < 3.0; t += 0.25) {
      // |h_d + g e^{jt}|^2 = |h_d|^2 + |g|^2 + 2 Re(e^{jt} h_d^H g); derivative -2 Im(e^{jt} h_d^H g)
      const Complex p = ch.direct.dot(g);
      const double closed = -2.0 * (std::polar(1.0, t) * p).imag() / sw;
      Eigen::VectorXd th(1);
      th << t;
      CHECK(std::abs(rate_gradient(ch, PhaseVector(th), sw, 0.0)[0] - closed) < 1e-8);
    }
  }
  SUBCASE("central differences") {
    std::mt19937_64 rng(14);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const ChannelSet ch = instance(1 + k % 8, 1 + (k / 8) % 8, 600 + k);
      const PhaseVector p = random_theta(ch.elements(), rng);
      const double sw = 0.05 + 0.1 * (k % 9);
      const double rho = distortion_factor(1 + k % 4);
      const auto f = [&](const Eigen::VectorXd& t) { return rate_objective(ch, PhaseVector(t), sw, rho); };
      const Eigen::VectorXd fd = oracle::central_difference(f, p.theta(), 1e-6);
      const Eigen::VectorXd an = rate_gradient(ch, p, sw, rho);
      worst = std::max(worst, (an - fd).norm() / std::max(fd.norm(), 1e-8));
    }
    CHECK(worst < 1e-5);
  }
  SUBCASE("vanishes at a fine-grid maximizer") {
    for (int k = 0; k < 10; ++k) {
      const ChannelSet ch = instance(2, 1, 700 + k);
      const double rho = distortion_factor(1);
      double best = -1.0;
      double arg = 0.0;
      const int steps = 200000;
      for (int i = 0; i < steps; ++i) {
        Eigen::VectorXd t(1);
        t << 2.0 * oracle::kPi * i / steps;
        const double v = rate_objective(ch, PhaseVector(t), 1.0, rho);
        if (v > best) best = v, arg = t[0];
      }
      // refine on the grid cell by golden section
      double lo = arg - 2.0 * oracle::kPi / steps;
      double hi = arg + 2.0 * oracle::kPi / steps;
      const auto f = [&](double x) {
        Eigen::VectorXd t(1);
        t << x;
        return rate_objective(ch, PhaseVector(t), 1.0, rho);
      };
      for (int it = 0; it < 100; ++it) {
        const double a = hi - 0.618033988749895 * (hi - lo);
        const double b = lo + 0.618033988749895 * (hi - lo);
        (f(a) < f(b) ? lo : hi) = f(a) < f(b) ? a : b;
      }
      Eigen::VectorXd t(1);
      t << 0.5 * (lo + hi);
      CHECK(std::abs(rate_gradient(ch, PhaseVector(t), 1.0, rho)[0]) < 1e-4);
    }
  }
}

TEST_CASE("gradient ascent") {
  SUBCASE("single element matches a fine scan") {
    for (int k = 0; k < 10; ++k) {
      const ChannelSet ch = instance(3, 1, 800 + k);
      const double rho = distortion_factor(2);
      Rng rng(k);
      const GdResult r = gd_beamform(ch, 0.5, rho, GdConfig{}, rng);
      double best = -1.0;
      double arg = 0.0;
      const int steps = 1 << 20;
      for (int i = 0; i < steps; ++i) {
        Eigen::VectorXd t(1);
        t << 2.0 * oracle::kPi * i / steps;
        const double v = rate_objective(ch, PhaseVector(t), 0.5, rho);
        if (v > best) best = v, arg = t[0];
      }
      const double diff = std::abs(std::remainder(r.theta.theta()[0] - arg, 2.0 * oracle::kPi));
      CHECK(diff < 1e-3);
      CHECK(r.value >= best - 1e-12);
    }
  }
  SUBCASE("accepted values never decrease") {
    for (int k = 0; k < 20; ++k) {
      const ChannelSet ch = instance(4, 2 + k % 6, 900 + k);
      Rng rng(k);
      const GdResult r = gd_beamform(ch, 0.1, distortion_factor(1), GdConfig{}, rng);
      CHECK(r.history.size() == 10);
      for (const auto& run : r.history)
        for (std::size_t i = 1; i < run.size(); ++i) CHECK(run[i] >= run[i - 1]);
      CHECK(r.value == doctest::Approx(rate_objective(ch, r.theta, 0.1, distortion_factor(1))).epsilon(1e-14));
    }
  }
  SUBCASE("periodic in theta") {
    std::mt19937_64 rng(15);
    const ChannelSet ch = instance(3, 4, 16);
    const PhaseVector p = random_theta(4, rng);
    const PhaseVector q((p.theta().array() + 2.0 * oracle::kPi).matrix());
    CHECK(std::abs(rate_objective(ch, p, 1.0, 0.2) - rate_objective(ch, q, 1.0, 0.2)) < 1e-12);
  }
  SUBCASE("close to the grid oracle") {
    int good = 0;
    const int total = 100;
    for (int k = 0; k < total; ++k) {
      const ChannelSet ch = instance(4, 1 + k % 4, 1000 + k);
      const double rho = distortion_factor(1);
      Rng rng(k);
      const GdResult r = gd_beamform(ch, 10.0, rho, GdConfig{}, rng);
      const OracleResult o = brute_force_oracle(ch, 10.0, rho, 16, OracleObjective::FullRate);
      if (r.value >= 0.98 * o.value) ++good;
    }
    CHECK(good >= 95);
  }
  SUBCASE("config validation") {
    GdConfig cfg;
    cfg.armijo_c = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.restarts = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }
}

TEST_CASE("phase matching") {
  SUBCASE("hand instance") {
    ChannelSet ch;
    ch.direct = Eigen::VectorXcd::Constant(1, Complex(2.0, 0.0));
    ch.incident = Eigen::VectorXcd::Constant(1, Complex(1.0, 0.0));
    ch.reflect = Eigen::MatrixXcd::Constant(1, 1, std::polar(1.0, oracle::kPi / 4));
    const PhaseVector p = phase_match(ch, 1.0);
    CHECK(std::abs(std::remainder(p.theta()[0] + oracle::kPi / 4, 2.0 * oracle::kPi)) < 1e-12);
  }
  SUBCASE("single antenna adds all paths coherently") {
    for (int k = 0; k < 20; ++k) {
      const ChannelSet ch = instance(1, 1 + k % 8, 1100 + k);
      const PhaseVector p = phase_match(ch, 1.0);
      double expect = std::abs(ch.direct[0]);
      for (int n = 0; n < ch.elements(); ++n) expect += std::abs(ch.reflect(0, n) * ch.incident[n]);
      CHECK(std::abs(std::abs(composite_channel(ch, p)[0]) - expect) < 1e-10);
    }
  }
  SUBCASE("linear term beats random phases") {
    std::mt19937_64 rng(17);
    const ChannelSet ch = instance(4, 6, 18);
    const double pm = linear_term(ch, phase_match(ch, 1.0).unit());
    for (int k = 0; k < 100; ++k) CHECK(pm >= linear_term(ch, random_theta(6, rng).unit()) - 1e-12);
  }
  SUBCASE("zero coupling maps to zero phase") {
    ChannelSet ch = instance(2, 3, 19);
    ch.direct.setZero();
    CHECK(phase_match(ch, 1.0).theta().isZero());
  }
}

TEST_CASE("exhaustive oracle") {
  SUBCASE("single element matches a 360-point scan") {
    const ChannelSet ch = instance(3, 1, 20);
    const double rho = distortion_factor(1);
    const OracleResult o = brute_force_oracle(ch, 1.0, rho, 360, OracleObjective::FullRate);
    double best = -1.0;
    for (int i = 0; i < 360; ++i) {
      Eigen::VectorXd t(1);
      t << 2.0 * oracle::kPi * i / 360;
      best = std::max(best, rate_objective(ch, PhaseVector(t), 1.0, rho));
    }
    CHECK(o.value == best);
    CHECK(o.evaluated == 360);
  }
  SUBCASE("dominates PM and GD snapped to the grid") {
    for (int k = 0; k < 10; ++k) {
      const ChannelSet ch = instance(3, 3, 1200 + k);
      const OracleResult o = brute_force_oracle(ch, 1.0, 0.0, 16, OracleObjective::LowSnr);
      Rng rng(k);
      for (const PhaseVector& p : {phase_match(ch, 1.0), gd_beamform(ch, 1.0, 0.0, GdConfig{}, rng).theta}) {
        Eigen::VectorXd snapped = (p.theta() / (2.0 * oracle::kPi / 16)).array().round() * (2.0 * oracle::kPi / 16);
        CHECK(o.value >= objective_trace(ch, PhaseVector(snapped), 1.0) - 1e-12);
      }
    }
  }
  SUBCASE("symmetric instance has equal phases") {
    ChannelSet ch = instance(2, 1, 21);
    ch.incident = Eigen::VectorXcd::Constant(2, ch.incident[0]);
    Eigen::MatrixXcd G(2, 2);
    G << ch.reflect.col(0), ch.reflect.col(0);
    ch.reflect = G;
    const OracleResult o = brute_force_oracle(ch, 1.0, 0.0, 16, OracleObjective::LowSnr);
    CHECK(o.theta.theta()[0] == o.theta.theta()[1]);
  }
  SUBCASE("refuses oversized grids") {
    CHECK(oracle_feasible(5, 16));
    CHECK_FALSE(oracle_feasible(6, 16));
    CHECK_THROWS_WITH_AS(brute_force_oracle(instance(2, 6, 22), 1.0, 0.0, 16, OracleObjective::LowSnr),
                         doctest::Contains("exceeds the bound"), InstanceTooLarge);
  }
}

TEST_CASE("low-SNR ordering of the solvers") {
  // The continuous solvers can land between grid points, so the oracle uses a
  // grid fine enough that its discretization loss stays below 2e-3.
  int ok_sdr = 0;
  int ok_gd = 0;
  int gd_over_pm = 0;
  const int total = 60;
  const double tol = 2e-3;
  for (int k = 0; k < total; ++k) {
    const int n = 1 + k % 3;
    const ChannelSet ch = instance(4, n, 1300 + k);
    const double sw = 10.0;
    const double rho = distortion_factor(1);
    Rng rng(k);
    const OracleResult low = brute_force_oracle(ch, sw, rho, 96, OracleObjective::LowSnr);
    const OracleResult full = brute_force_oracle(ch, sw, rho, 96, OracleObjective::FullRate);
    const double sdr = objective_trace(ch, sdr_beamform(ch, sw, 200, rng).rounded, sw);
    const GdResult gd = gd_beamform(ch, sw, rho, GdConfig{}, rng);
    const double pm = rate_objective(ch, phase_match(ch, sw), sw, rho);
    ok_sdr += low.value >= sdr * (1.0 - tol) ? 1 : 0;
    ok_gd += full.value >= gd.value * (1.0 - tol) ? 1 : 0;
    gd_over_pm += gd.value >= pm - 1e-12 ? 1 : 0;
  }
  CHECK(ok_sdr >= 0.9 * total);
  CHECK(ok_gd >= 0.9 * total);
  CHECK(gd_over_pm >= 0.99 * total);
}
