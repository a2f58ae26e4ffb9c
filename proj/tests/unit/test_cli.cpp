#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "irsq/estimation.hpp"
#include "irsq/experiments.hpp"

using namespace irsq;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name, const std::string& content) {
  const fs::path dir = fs::temp_directory_path() / "irsq_cli_test";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << content;
  return p;
}

const std::vector<std::string> kSmallRate = {"--override", "snr_db=[0,10]", "--override", "trials=2",
                                             "--override", "n=3",           "--override", "gd.restarts=2",
                                             "--override", "sdr.randomizations=10"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

}  // namespace

TEST_CASE("rate sweep writes the CSV and a summary") {
  const Result r = invoke(with({"rate-sweep", "--seed", "5", "--threads", "1"}, kSmallRate));
  CHECK(r.code == 0);
  CHECK(r.out.rfind("snr_db,tau,n,bits,method,trial,seed,metric,value\n", 0) == 0);
  CHECK(r.err.find("rate-sweep: 2 sweep points x 2 trials, master seed 5, 1 thread(s)") != std::string::npos);
}

TEST_CASE("output does not depend on the thread count") {
  const Result a = invoke(with({"rate-sweep", "--seed", "9", "--threads", "1"}, kSmallRate));
  const Result b = invoke(with({"rate-sweep", "--seed", "9", "--threads", "3"}, kSmallRate));
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("thread count falls back to the environment") {
  ::setenv("IRS_SIM_THREADS", "3", 1);
  const Result r = invoke(with({"rate-sweep"}, kSmallRate));
  CHECK(r.err.find(", 3 thread(s)") != std::string::npos);
  const Result flag = invoke(with({"rate-sweep", "--threads", "2"}, kSmallRate));
  CHECK(flag.err.find(", 2 thread(s)") != std::string::npos);
  ::setenv("IRS_SIM_THREADS", "zero", 1);
  CHECK(invoke(with({"rate-sweep"}, kSmallRate)).code == 1);
  ::unsetenv("IRS_SIM_THREADS");
}

TEST_CASE("config files and dotted overrides") {
  const fs::path cfg = scratch("cfg.json", R"({"snr_db": [0], "n": 2, "trials": 1, "gd": {"restarts": 1}, "methods": ["gd"]})");
  const Result base = invoke({"rate-sweep", "--config", cfg.string(), "--threads", "1"});
  CHECK(base.code == 0);
  const Result more = invoke({"rate-sweep", "--config", cfg.string(), "--threads", "1", "--override", "gd.max_iters=1"});
  CHECK(more.code == 0);
  CHECK(more.out != base.out);
  CHECK(more.out.find(",gd,0,") != std::string::npos);
  CHECK(more.out.find("iterations,1\n") != std::string::npos);
}

TEST_CASE("configuration errors exit with 1") {
  SUBCASE("decoy key") {
    const fs::path cfg = scratch("decoy.json", R"({"snr_db": [0], "decoy_key": 3})");
    const Result r = invoke({"rate-sweep", "--config", cfg.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("decoy_key") != std::string::npos);
  }
  SUBCASE("decoy nested key") {
    CHECK(invoke({"rate-sweep", "--override", "gd.decoy=1"}).code == 1);
  }
  SUBCASE("malformed JSON") {
    const fs::path cfg = scratch("bad.json", R"({"snr_db": [0,)");
    CHECK(invoke({"rate-sweep", "--config", cfg.string()}).code == 1);
  }
  SUBCASE("missing file") {
    CHECK(invoke({"rate-sweep", "--config", "/nonexistent/cfg.json"}).code == 1);
  }
  SUBCASE("unwritable output") {
    CHECK(invoke({"crlb", "--output", "/nonexistent/dir/out.csv"}).code == 1);
  }
  SUBCASE("wrong types and values") {
    CHECK(invoke({"rate-sweep", "--override", "trials=\"many\""}).code == 1);
    CHECK(invoke({"rate-sweep", "--override", "trials=0"}).code == 1);
    CHECK(invoke({"rate-sweep", "--override", "methods=[\"ml\"]"}).code == 1);
    CHECK(invoke({"estimate-sweep", "--override", "estimation.sigma_e_source=oracle"}).code == 1);
    CHECK(invoke({"rate-sweep", "--override", "novalue"}).code == 1);
  }
  SUBCASE("usage") {
    CHECK(invoke({}).code == 1);
    CHECK(invoke({"frobnicate"}).code == 1);
    CHECK(invoke({"rate-sweep", "--threads", "0"}).code == 1);
  }
}

TEST_CASE("solver failure exits with 2") {
  const Result r = invoke({"beamform", "--override", "n=8", "--override", "methods=[\"sdr\"]", "--override",
                           "sdr.max_sweeps=1", "--override", "sdr.tolerance=1e-15", "--override", "sdr.restarts=1"});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("beamform prints per-method results") {
  const Result r = invoke({"beamform", "--override", "n=5", "--override", "snr_db=[0]", "--override",
                           "methods=[\"no_irs\",\"pm\",\"sdr\",\"gd\",\"oracle\"]", "--seed", "3"});
  CHECK(r.code == 0);
  for (const char* m : {"no_irs: rate_bits", "pm: rate_bits", "sdr: rate_bits", "gd: rate_bits", "oracle: rate_bits",
                        "theta [", "sdr_upper_bound"})
    CHECK(r.out.find(m) != std::string::npos);
}

TEST_CASE("crlb matches the library bitwise") {
  const Result r = invoke({"crlb", "--override", "antennas=2", "--override", "tau=16", "--override", "snr_db=5",
                           "--seed", "1234"});
  REQUIRE(r.code == 0);
  SystemConfig cfg;
  cfg.antennas = 2;
  cfg.elements = 0;
  const double noise = noise_var_from_snr_db(5.0);
  Rng rng(trial_seed(1234, 0, 0));
  const ChannelSet ch = gen_channels(cfg, rng);
  const PilotFrame f = gen_pilots(16, rng);
  const RealizedPilotSystem sys = realize_system(ch, f, noise, std::nullopt, rng);
  const FisherInfo info = fisher_matrix(sys.regressor, sys.truth, noise);
  const std::string expect = "crlb_trace " + format_double(info.crlb_trace) + "\nsigma_e2 " +
                             format_double(info.sigma_e2) + "\ninvertible 1\n";
  CHECK(r.out == expect);
}

TEST_CASE("selftest reports counts") {
  const Result r = invoke({"selftest"});
  CHECK(r.code == 0);
  CHECK(r.err.find("checks passed, 0 failed") != std::string::npos);
}

TEST_CASE("output file") {
  const fs::path out = fs::temp_directory_path() / "irsq_cli_test" / "sweep.csv";
  fs::create_directories(out.parent_path());
  const Result r = invoke({"estimate-sweep", "--output", out.string(), "--override", "snr_db=[0]", "--override",
                           "trials=2", "--override", "tau=8", "--override", "n=2"});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream in(out);
  std::string header;
  std::getline(in, header);
  CHECK(header == "snr_db,tau,n,bits,method,trial,seed,metric,value");
}
