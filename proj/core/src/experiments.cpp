#include "irsq/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <utility>

#include "irsq/errors.hpp"
#include "irsq/quantization.hpp"

namespace irsq {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

using TrialFn = std::vector<TrialRecord> (*)(const SweepSpec&, const SweepPoint&, int, std::uint64_t);

class TrialSink {
 public:
  TrialSink(const SweepPoint& p, int trial, std::uint64_t seed) : point_(p), trial_(trial), seed_(seed) {}
  void add(std::string_view method, Metric m, double value) {
    out_.push_back({point_, std::string(method), trial_, seed_, m, value});
  }
  std::vector<TrialRecord> take() { return std::move(out_); }

 private:
  SweepPoint point_;
  int trial_;
  std::uint64_t seed_;
  std::vector<TrialRecord> out_;
};

// Runs every (point, trial) item on `threads` workers and concatenates the
// results ordered by point, method (first-appearance order), trial.
std::vector<TrialRecord> run_sweep(const SweepSpec& spec, const RunOptions& run, TrialFn fn) {
  const std::size_t points = spec.point_count();
  const std::size_t trials = static_cast<std::size_t>(spec.trials);
  const std::size_t items = points * trials;
  std::vector<std::vector<TrialRecord>> slots(items);
  std::vector<std::exception_ptr> errors(items);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t k = next++; k < items; k = next++) {
      const std::size_t p = k / trials;
      const int t = static_cast<int>(k % trials);
      try {
        slots[k] = fn(spec, sweep_point(spec, p), t, trial_seed(spec.master_seed, p, t));
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(run.threads, static_cast<int>(std::max<std::size_t>(items, 1))));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<TrialRecord> out;
  for (std::size_t p = 0; p < points; ++p) {
    std::vector<std::string> order;
    for (std::size_t t = 0; t < trials; ++t)
      for (const auto& r : slots[p * trials + t])
        if (std::find(order.begin(), order.end(), r.method) == order.end()) order.push_back(r.method);
    for (const auto& method : order)
      for (std::size_t t = 0; t < trials; ++t)
        for (auto& r : slots[p * trials + t])
          if (r.method == method) out.push_back(std::move(r));
  }
  return out;
}

void record_rate(TrialSink& sink, std::string_view method, const Eigen::VectorXcd& h, const SystemConfig& cfg,
                 double rho) {
  const double noise = cfg.noise_var / cfg.signal_var;
  double gamma = 0.0;
  for (Eigen::Index m = 0; m < h.size(); ++m) gamma += std::norm(h[m]) / (noise + rho * std::norm(h[m]));
  sink.add(method, Metric::RateBits, achievable_rate(h, cfg.signal_var, cfg.noise_var, rho));
  sink.add(method, Metric::Objective, gamma);
}

std::vector<TrialRecord> rate_trial(const SweepSpec& spec, const SweepPoint& pt, int trial, std::uint64_t seed) {
  SystemConfig cfg = spec.base;
  cfg.elements = pt.n;
  cfg.pilot_length = pt.tau;
  cfg.bits = pt.bits;
  cfg.noise_var = noise_var_from_snr_db(pt.snr_db);
  cfg.validate();
  const double rho = distortion_factor(pt.bits);
  // Beamformers see sigma_w^2 / sigma_x^2; all objectives are scale-free otherwise.
  const double noise = cfg.noise_var / cfg.signal_var;

  Rng channel_rng(seed);
  const ChannelSet ch = gen_channels(cfg, channel_rng);
  TrialSink sink(pt, trial, seed);

  for (const auto& method : spec.methods) {
    Rng rng = method_stream(seed, method);
    if (method == "no_irs" || cfg.elements == 0) {
      record_rate(sink, method, composite_channel(ch, IrsOff{}), cfg, rho);
      if (method == "gd" || method == "sdr") {
        sink.add(method, Metric::Iterations, 0.0);
        sink.add(method, Metric::Converged, 1.0);
      }
      continue;
    }
    if (method == "random_phase") {
      record_rate(sink, method, composite_channel(ch, random_phases(cfg.elements, rng)), cfg, rho);
    } else if (method == "pm") {
      record_rate(sink, method, composite_channel(ch, phase_match(ch, noise)), cfg, rho);
    } else if (method == "sdr") {
      const HomogenizedObjective obj = homogenize(ch, noise);
      SdpResult sdp;
      bool certified = true;
      try {
        sdp = solve_sdr(obj, spec.sdp);
      } catch (const SdpNotConverged& e) {
        sdp = e.best();
        certified = false;
      }
      const PhaseVector u = randomize_round(sdp.U, obj, spec.sdr_randomizations, rng);
      record_rate(sink, method, composite_channel(ch, u), cfg, rho);
      sink.add(method, Metric::Iterations, sdp.sweeps);
      sink.add(method, Metric::Converged, certified ? 1.0 : 0.0);
    } else if (method == "gd") {
      const GdResult gd = gd_beamform(ch, noise, rho, spec.gd, rng);
      record_rate(sink, method, composite_channel(ch, gd.theta), cfg, rho);
      sink.add(method, Metric::Iterations, gd.iterations);
      sink.add(method, Metric::Converged, gd.converged ? 1.0 : 0.0);
    } else if (method == "oracle") {
      if (!oracle_feasible(cfg.elements, spec.oracle_grid)) {
        sink.add(method, Metric::Converged, 0.0);
        continue;
      }
      const OracleResult best = brute_force_oracle(ch, noise, rho, spec.oracle_grid, OracleObjective::FullRate);
      record_rate(sink, method, composite_channel(ch, best.theta), cfg, rho);
      sink.add(method, Metric::Iterations, static_cast<double>(best.evaluated));
      sink.add(method, Metric::Converged, 1.0);
    }
  }
  return sink.take();
}

void record_estimate(TrialSink& sink, std::string_view method, const EstimationResult& r, const Eigen::VectorXcd& truth) {
  sink.add(method, Metric::Nmse, nmse(r.h_hat, truth));
  sink.add(method, Metric::Iterations, r.iterations);
  sink.add(method, Metric::Converged, r.converged ? 1.0 : 0.0);
}

std::vector<TrialRecord> estimation_trial(const SweepSpec& spec, const SweepPoint& pt, int trial,
                                          std::uint64_t seed) {
  SystemConfig cfg = spec.base;
  cfg.elements = pt.n;
  cfg.pilot_length = pt.tau;
  cfg.bits = pt.bits;
  cfg.noise_var = noise_var_from_snr_db(pt.snr_db);
  cfg.validate();
  const EstimationSettings& est = spec.estimation;
  const int m_count = cfg.antennas;

  // Draw order: channels, Phase I pilots and noise, Phase II pilots, residual, noise.
  Rng rng(seed);
  const ChannelSet ch = gen_channels(cfg, rng);
  TrialSink sink(pt, trial, seed);

  const PilotFrame frame1 = gen_pilots(cfg.pilot_length, rng);
  const RealizedPilotSystem sys1 = realize_system(ch, frame1, cfg.noise_var, std::nullopt, rng);
  MlOptions ml_opts;
  ml_opts.reflect_rel_tol = est.reflect_rel_tol;
  const EstimationResult direct = ml_direct(sys1, ml_opts);

  const FisherInfo genie = fisher_matrix(sys1.regressor, sys1.truth, cfg.noise_var, est.error_scale);
  sink.add("crlb", Metric::CrlbTrace, genie.crlb_trace);
  sink.add("crlb", Metric::Nmse, genie.crlb_trace / ch.direct.squaredNorm());
  record_estimate(sink, "ml_direct", direct, ch.direct);

  const FisherInfo& info =
      est.sigma_e_source == SigmaESource::Genie
          ? genie
          : fisher_matrix(sys1.regressor, direct.h_real, cfg.noise_var, est.error_scale);
  const double sigma_e2 = direct_error_variance(info, m_count, est.prior_var);

  const PilotFrame frame2 = gen_reflect_pilots(cfg.pilot_length, cfg.elements, rng);
  const RealizedPilotSystem sys2 = realize_system(ch, frame2, cfg.noise_var, sigma_e2, rng);
  const Eigen::VectorXcd truth = cascade_vector(ch);

  for (const auto& method : spec.methods) {
    if (method == "ml") {
      record_estimate(sink, method, ml_reflect(sys2, ml_opts), truth);
    } else if (method == "ls") {
      record_estimate(sink, method, ls_estimate(sys2), truth);
    } else if (method == "lmmse") {
      record_estimate(sink, method, lmmse_estimate(sys2, est.prior_var), truth);
    }
  }
  return sink.take();
}

template <class T>
void require_grid(const std::vector<T>& grid, const char* name) {
  if (grid.empty()) throw std::invalid_argument(std::string("sweep grid '") + name + "' is empty");
}

}  // namespace

Rng method_stream(std::uint64_t trial_seed, std::string_view method) {
  std::uint64_t tag = 1469598103934665603ULL;  // FNV-1a
  for (const char ch : method) tag = (tag ^ static_cast<unsigned char>(ch)) * 1099511628211ULL;
  return Rng(splitmix64(trial_seed ^ tag));
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::RateBits: return "rate_bits";
    case Metric::Nmse: return "nmse";
    case Metric::CrlbTrace: return "crlb_trace";
    case Metric::Objective: return "objective";
    case Metric::Iterations: return "iterations";
    case Metric::Converged: return "converged";
  }
  return "unknown";
}

SweepSpec SweepSpec::rate_defaults() {
  SweepSpec s;
  s.base.antennas = 4;
  s.snr_db = {-10, -5, 0, 5, 10, 15, 20, 25, 30};
  s.tau = {32};
  s.n = {5};
  s.bits = {1};
  s.methods = {"no_irs", "random_phase", "pm", "sdr", "gd"};
  s.trials = 100;
  return s;
}

SweepSpec SweepSpec::estimation_defaults() {
  SweepSpec s;
  s.base.antennas = 2;
  s.snr_db = {-5, 0, 5, 10, 15, 20, 25, 30};
  s.tau = {32};
  s.n = {4};
  s.bits = {1};
  s.methods = {"ml", "ls", "lmmse"};
  s.trials = 100;
  return s;
}

void SweepSpec::validate(const std::vector<std::string_view>& allowed) const {
  if (base.antennas < 1) throw std::invalid_argument("antennas must be >= 1");
  if (!(base.signal_var > 0.0) || !std::isfinite(base.signal_var)) throw std::invalid_argument("signal_var must be > 0");
  require_grid(snr_db, "snr_db");
  require_grid(tau, "tau");
  require_grid(n, "n");
  require_grid(bits, "bits");
  require_grid(methods, "methods");
  for (const double s : snr_db)
    if (!std::isfinite(s)) throw std::invalid_argument("snr_db entries must be finite");
  for (const int t : tau)
    if (t < 1) throw std::invalid_argument("tau entries must be >= 1");
  for (const int e : n)
    if (e < 0) throw std::invalid_argument("n entries must be >= 0");
  for (const int b : bits)
    if (b < 1) throw std::invalid_argument("bits entries must be >= 1");
  for (const auto& m : methods)
    if (std::find(allowed.begin(), allowed.end(), m) == allowed.end())
      throw std::invalid_argument("unknown method '" + m + "'");
  for (std::size_t i = 0; i < methods.size(); ++i)
    if (std::find(methods.begin(), methods.begin() + static_cast<std::ptrdiff_t>(i), methods[i]) !=
        methods.begin() + static_cast<std::ptrdiff_t>(i))
      throw std::invalid_argument("method '" + methods[i] + "' listed twice");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  gd.validate();
  if (sdr_randomizations < 1) throw std::invalid_argument("sdr.randomizations must be >= 1");
  if (sdp.max_sweeps < 1 || sdp.restarts < 1 || !(sdp.tolerance > 0.0))
    throw std::invalid_argument("sdr solver settings must be positive");
  if (oracle_grid < 2) throw std::invalid_argument("oracle.grid must be >= 2");
  if (!(estimation.prior_var > 0.0)) throw std::invalid_argument("estimation.prior_var must be > 0");
  if (!(estimation.error_scale > 0.0)) throw std::invalid_argument("estimation.error_scale must be > 0");
  if (!(estimation.reflect_rel_tol > 0.0)) throw std::invalid_argument("estimation.reflect_rel_tol must be > 0");
}

std::size_t SweepSpec::point_count() const { return snr_db.size() * tau.size() * n.size() * bits.size(); }

SweepPoint sweep_point(const SweepSpec& spec, std::size_t index) {
  if (index >= spec.point_count()) throw std::out_of_range("sweep point index out of range");
  SweepPoint p;
  p.bits = spec.bits[index % spec.bits.size()];
  index /= spec.bits.size();
  p.n = spec.n[index % spec.n.size()];
  index /= spec.n.size();
  p.tau = spec.tau[index % spec.tau.size()];
  index /= spec.tau.size();
  p.snr_db = spec.snr_db[index];
  return p;
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t point, int trial) {
  const std::uint64_t key = (static_cast<std::uint64_t>(point) << 32) | static_cast<std::uint32_t>(trial);
  // Each step is a bijection of the key, so distinct keys never collide.
  return splitmix64(splitmix64(key) + master_seed);
}

std::vector<TrialRecord> run_rate_sweep(const SweepSpec& spec, const RunOptions& run) {
  spec.validate({std::begin(kRateMethods), std::end(kRateMethods)});
  return run_sweep(spec, run, &rate_trial);
}

std::vector<TrialRecord> run_estimation_sweep(const SweepSpec& spec, const RunOptions& run) {
  spec.validate({std::begin(kEstimationMethods), std::end(kEstimationMethods)});
  for (const int b : spec.bits)
    if (b != 1) throw std::invalid_argument("estimation sweeps are 1-bit only (bits = 1)");
  for (const int e : spec.n)
    if (e < 1) throw std::invalid_argument("estimation sweeps need n >= 1");
  return run_sweep(spec, run, &estimation_trial);
}

double direct_error_variance(const FisherInfo& info, int antennas, double prior_var) {
  const double cap = antennas * prior_var;
  if (!info.invertible || !std::isfinite(info.sigma_e2)) return cap;
  return std::min(info.sigma_e2, cap);
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << format_double(r.point.snr_db) << ',' << r.point.tau << ',' << r.point.n << ',' << r.point.bits << ','
        << r.method << ',' << r.trial << ',' << r.seed << ',' << metric_name(r.metric) << ','
        << format_double(r.value) << '\n';
  }
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  std::vector<SummaryRow> rows;
  std::map<std::tuple<double, int, int, int, std::string, int>, std::size_t> index;
  for (const auto& r : records) {
    const auto key = std::make_tuple(r.point.snr_db, r.point.tau, r.point.n, r.point.bits, r.method,
                                     static_cast<int>(r.metric));
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, rows.size()).first;
      rows.push_back({r.point, r.method, r.metric, 0.0, 0});
    }
    SummaryRow& row = rows[it->second];
    ++row.count;
    row.mean += r.value;  // sum until the final pass
  }
  for (auto& row : rows) row.mean /= row.count;
  return rows;
}

}  // namespace irsq
