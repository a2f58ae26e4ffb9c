// Monte-Carlo sweeps over SNR, pilot length, surface size and ADC bits.
//
// Records are emitted per trial in long format and ordered by sweep point,
// then method, then trial. Each trial draws from its own generator seeded
// from (master seed, point index, trial index), so the output does not
// depend on how many worker threads ran the trials.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "irsq/beamforming.hpp"
#include "irsq/channel_model.hpp"
#include "irsq/estimation.hpp"
#include "irsq/sdp.hpp"

namespace irsq {

enum class Metric { RateBits, Nmse, CrlbTrace, Objective, Iterations, Converged };

std::string_view metric_name(Metric m);

inline constexpr std::string_view kRateMethods[] = {"no_irs", "random_phase", "pm", "sdr", "gd", "oracle"};
inline constexpr std::string_view kEstimationMethods[] = {"ml", "ls", "lmmse"};

enum class SigmaESource { Genie, Blind };

struct EstimationSettings {
  double prior_var = 1.0;               // per-entry variance of the channel prior
  SigmaESource sigma_e_source = SigmaESource::Genie;
  double error_scale = kDirectErrorScale;  // sigma_e^2 = error_scale * tr(J^{-1})
  double reflect_rel_tol = 1e-3;
};

struct SweepSpec {
  SystemConfig base;  // antennas and signal_var; the grids supply the rest
  std::vector<double> snr_db;
  std::vector<int> tau;
  std::vector<int> n;
  std::vector<int> bits;
  std::vector<std::string> methods;
  int trials = 1;
  std::uint64_t master_seed = 0;

  GdConfig gd{};
  int sdr_randomizations = 200;
  SdpOptions sdp{};
  int oracle_grid = 16;
  EstimationSettings estimation{};

  static SweepSpec rate_defaults();
  static SweepSpec estimation_defaults();

  /// Throws std::invalid_argument naming the offending field. `allowed` is
  /// the method set of the sweep kind.
  void validate(const std::vector<std::string_view>& allowed) const;
  [[nodiscard]] std::size_t point_count() const;
};

struct SweepPoint {
  double snr_db = 0.0;
  int tau = 0;
  int n = 0;
  int bits = 0;
};

/// Point `index` of the grid product, bits varying fastest and SNR slowest.
SweepPoint sweep_point(const SweepSpec& spec, std::size_t index);

struct TrialRecord {
  SweepPoint point;
  std::string method;
  int trial = 0;
  std::uint64_t seed = 0;
  Metric metric = Metric::RateBits;
  double value = 0.0;
};

/// Seed of one trial; distinct for distinct (point, trial) below 2^32 each.
std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t point, int trial);

/// Generator of one method within a trial. Streams are independent of each
/// other, so adding or removing a method leaves the others' draws unchanged.
Rng method_stream(std::uint64_t trial_seed, std::string_view method);

struct RunOptions {
  int threads = 1;
};

std::vector<TrialRecord> run_rate_sweep(const SweepSpec& spec, const RunOptions& run = {});

/// Besides the requested methods, every trial carries a `crlb` entry with
/// the Phase I bound tr(J^{-1}) at the true h_d (crlb_trace, and nmse as the
/// bound over ||h_d||^2) and an `ml_direct` entry for the Phase I estimate.
std::vector<TrialRecord> run_estimation_sweep(const SweepSpec& spec, const RunOptions& run = {});

/// sigma_e^2 handed to Phase II: error_scale * tr(J^{-1}), capped at the
/// prior energy M * prior_var of h_d.
double direct_error_variance(const FisherInfo& info, int antennas, double prior_var);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

inline constexpr std::string_view kCsvHeader = "snr_db,tau,n,bits,method,trial,seed,metric,value";

void write_csv(std::ostream& out, const std::vector<TrialRecord>& records);

struct SummaryRow {
  SweepPoint point;
  std::string method;
  Metric metric = Metric::RateBits;
  double mean = 0.0;
  int count = 0;
};

/// Means per (point, method, metric) in record order.
std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);

}  // namespace irsq
