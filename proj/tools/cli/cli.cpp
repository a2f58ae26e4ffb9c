#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "config.hpp"
#include "irsq/beamforming.hpp"
#include "irsq/errors.hpp"
#include "irsq/estimation.hpp"
#include "irsq/experiments.hpp"
#include "irsq/quantization.hpp"
#include "selftest.hpp"

namespace irsq::cli {
namespace {

struct Options {
  std::string config_path;
  std::string output_path;
  std::vector<std::string> overrides;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

int resolve_threads(const Options& o) {
  if (o.threads) {
    if (*o.threads < 1) throw ConfigError("--threads must be >= 1");
    return *o.threads;
  }
  if (const char* env = std::getenv("IRS_SIM_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) throw ConfigError(std::string("IRS_SIM_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<int>(v);
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

SweepSpec load_spec(const Options& o, SweepKind kind) {
  nlohmann::json config = o.config_path.empty() ? nlohmann::json::object() : load_config_file(o.config_path);
  for (const auto& ov : o.overrides) apply_override(config, ov);
  if (o.seed) config["master_seed"] = *o.seed;
  return spec_from_json(config, kind);
}

// Output sink opened before any work so an unwritable path fails fast.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw ConfigError("cannot open output file '" + path + "' for writing");
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw ConfigError("failed writing output");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::string point_label(const SweepPoint& p) {
  std::ostringstream s;
  s << "snr " << format_double(p.snr_db) << " dB, tau " << p.tau << ", n " << p.n << ", bits " << p.bits;
  return s.str();
}

void write_summary(std::ostream& err, const char* command, const SweepSpec& spec, const std::vector<TrialRecord>& records,
                   Metric headline, int threads) {
  std::ostringstream s;
  s << command << ": " << spec.point_count() << " sweep points x " << spec.trials << " trials, master seed "
    << spec.master_seed << ", " << threads << " thread(s), " << records.size() << " records. Mean "
    << metric_name(headline) << " per point:";
  std::string current;
  for (const auto& r : summarize(records)) {
    if (r.metric != headline) continue;
    const std::string label = point_label(r.point);
    s << (label == current ? ", " : (current.empty() ? " (" : "; (")) ;
    if (label != current) s << label << ") ";
    s << r.method << " " << std::setprecision(4) << r.mean;
    current = label;
  }
  s << '.';
  err << s.str() << '\n';
}

int cmd_sweep(const Options& o, SweepKind kind, std::ostream& out, std::ostream& err) {
  const SweepSpec spec = load_spec(o, kind);
  const int threads = resolve_threads(o);
  Output sink(o.output_path, out);
  const RunOptions run{threads};
  const auto records = kind == SweepKind::Rate ? run_rate_sweep(spec, run) : run_estimation_sweep(spec, run);
  write_csv(sink.get(), records);
  sink.finish();
  write_summary(err, kind == SweepKind::Rate ? "rate-sweep" : "estimate-sweep", spec, records,
                kind == SweepKind::Rate ? Metric::RateBits : Metric::Nmse, threads);
  return kExitOk;
}

std::string format_theta(const PhaseVector& p) {
  std::string s = "[";
  for (int i = 0; i < p.size(); ++i) s += (i ? "," : "") + format_double(p.theta()[i]);
  return s + "]";
}

int cmd_beamform(const Options& o, std::ostream& out, std::ostream& err) {
  SweepSpec spec = load_spec(o, SweepKind::Rate);
  Output sink(o.output_path, out);
  const SweepPoint pt = sweep_point(spec, 0);
  SystemConfig cfg = spec.base;
  cfg.elements = pt.n;
  cfg.bits = pt.bits;
  cfg.noise_var = noise_var_from_snr_db(pt.snr_db);
  if (cfg.elements < 1) throw ConfigError("beamform needs n >= 1");
  const double rho = distortion_factor(pt.bits);
  const double noise = cfg.noise_var / cfg.signal_var;
  const std::uint64_t seed = trial_seed(spec.master_seed, 0, 0);
  Rng channel_rng(seed);
  const ChannelSet ch = gen_channels(cfg, channel_rng);

  std::ostream& os = sink.get();
  os << "instance: M " << cfg.antennas << ", N " << cfg.elements << ", " << point_label(pt) << ", seed " << seed
     << ", rho " << format_double(rho) << '\n';
  auto report = [&](const std::string& method, const PhaseVector& theta, const std::string& extra) {
    const Eigen::VectorXcd h = composite_channel(ch, theta);
    os << method << ": rate_bits " << format_double(achievable_rate(h, cfg.signal_var, cfg.noise_var, rho))
       << ", objective " << format_double(rate_objective(ch, theta, noise, rho)) << ", low_snr_objective "
       << format_double(objective_trace(ch, theta, noise)) << extra << ", theta " << format_theta(theta) << '\n';
  };
  for (const auto& method : spec.methods) {
    Rng rng = method_stream(seed, method);
    if (method == "no_irs") {
      const Eigen::VectorXcd h = composite_channel(ch, IrsOff{});
      os << "no_irs: rate_bits " << format_double(achievable_rate(h, cfg.signal_var, cfg.noise_var, rho)) << '\n';
    } else if (method == "random_phase") {
      report(method, random_phases(cfg.elements, rng), "");
    } else if (method == "pm") {
      report(method, phase_match(ch, noise), "");
    } else if (method == "sdr") {
      const SdrSolution sol = sdr_beamform(ch, noise, spec.sdr_randomizations, rng, spec.sdp);
      report(method, sol.rounded, ", sdr_upper_bound " + format_double(sol.upper_bound));
    } else if (method == "gd") {
      const GdResult gd = gd_beamform(ch, noise, rho, spec.gd, rng);
      report(method, gd.theta, ", iterations " + std::to_string(gd.iterations) + ", converged " + (gd.converged ? "1" : "0"));
    } else if (method == "oracle") {
      if (!oracle_feasible(cfg.elements, spec.oracle_grid)) {
        os << "oracle: skipped, grid^N exceeds " << kOracleMaxPoints << " points\n";
        continue;
      }
      report(method, brute_force_oracle(ch, noise, rho, spec.oracle_grid, OracleObjective::FullRate).theta, "");
    }
  }
  sink.finish();
  err << "beamform: one instance, " << spec.methods.size() << " method(s) compared at " << point_label(pt) << ".\n";
  return kExitOk;
}

int cmd_crlb(const Options& o, std::ostream& out, std::ostream& err) {
  const SweepSpec spec = load_spec(o, SweepKind::Estimation);
  Output sink(o.output_path, out);
  const SweepPoint pt = sweep_point(spec, 0);
  SystemConfig cfg = spec.base;
  cfg.elements = 0;
  cfg.pilot_length = pt.tau;
  cfg.noise_var = noise_var_from_snr_db(pt.snr_db);
  const std::uint64_t seed = trial_seed(spec.master_seed, 0, 0);
  Rng rng(seed);
  const ChannelSet ch = gen_channels(cfg, rng);
  const PilotFrame frame = gen_pilots(cfg.pilot_length, rng);
  const RealizedPilotSystem sys = realize_system(ch, frame, cfg.noise_var, std::nullopt, rng);
  const FisherInfo info = fisher_matrix(sys.regressor, sys.truth, cfg.noise_var, spec.estimation.error_scale);
  sink.get() << "crlb_trace " << format_double(info.crlb_trace) << "\nsigma_e2 " << format_double(info.sigma_e2)
             << "\ninvertible " << (info.invertible ? 1 : 0) << '\n';
  sink.finish();
  err << "crlb: Phase I bound at the true direct channel, M " << cfg.antennas << ", " << point_label(pt) << ", seed "
      << seed << ".\n";
  return kExitOk;
}

int cmd_selftest(const Options& o, std::ostream& out, std::ostream& err) {
  const SweepSpec spec = load_spec(o, SweepKind::Rate);
  Output sink(o.output_path, out);
  const auto checks = run_selftest(spec.master_seed);
  int passed = 0;
  int total = 0;
  for (const auto& c : checks) {
    sink.get() << c.name << ": " << c.passed << "/" << c.total << " passed, worst error " << format_double(c.worst) << '\n';
    passed += c.passed;
    total += c.total;
  }
  sink.finish();
  err << "selftest: " << passed << " of " << total << " checks passed, " << (total - passed) << " failed.\n";
  return passed == total ? kExitOk : kExitNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"IRS-assisted few-bit receiver simulator"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed_value = 0;
  int thread_value = 0;
  std::vector<CLI::App*> subs;
  for (const char* name : {"rate-sweep", "estimate-sweep", "beamform", "crlb", "selftest"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", o.config_path, "JSON configuration file");
    sub->add_option("--output", o.output_path, "output file (default: standard output)");
    sub->add_option("--override", o.overrides, "key=value with dotted keys; repeatable")->allow_extra_args(false);
    sub->add_option("--threads", thread_value, "worker threads (fallback: IRS_SIM_THREADS)");
    sub->add_option("--seed", seed_value, "master seed");
    subs.push_back(sub);
  }
  subs[0]->description("Monte-Carlo achievable-rate sweep, CSV output");
  subs[1]->description("Monte-Carlo 1-bit channel-estimation sweep, CSV output");
  subs[2]->description("Compare beamformers on one seeded instance");
  subs[3]->description("Phase I Fisher bound on one seeded instance");
  subs[4]->description("Run the numerical invariant checks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  for (CLI::App* sub : subs) {
    if (sub->count("--threads") > 0) o.threads = thread_value;
    if (sub->count("--seed") > 0) o.seed = seed_value;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "rate-sweep") return cmd_sweep(o, SweepKind::Rate, out, err);
    if (cmd == "estimate-sweep") return cmd_sweep(o, SweepKind::Estimation, out, err);
    if (cmd == "beamform") return cmd_beamform(o, out, err);
    if (cmd == "crlb") return cmd_crlb(o, out, err);
    return cmd_selftest(o, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace irsq::cli
