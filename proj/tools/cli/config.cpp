#include "config.hpp"

#include <fstream>
#include <functional>
#include <map>

namespace irsq::cli {
namespace {

using nlohmann::json;
using Handler = std::function<void(const json&, const std::string&)>;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config key '" + path + "': " + what);
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  const auto x = v.get<long long>();
  if (x < -2147483647LL || x > 2147483647LL) fail(path, "integer out of range");
  return static_cast<int>(x);
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  fail(path, "expected a non-negative integer");
}

// A scalar stands for a one-element list.
template <class T, class F>
std::vector<T> as_list(const json& v, const std::string& path, F convert) {
  std::vector<T> out;
  if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(convert(v[i], path + "[" + std::to_string(i) + "]"));
  } else {
    out.push_back(convert(v, path));
  }
  return out;
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

void consume(const json& obj, const std::string& prefix, const std::map<std::string, Handler>& handlers) {
  if (!obj.is_object()) fail(prefix.empty() ? "<root>" : prefix, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    const auto h = handlers.find(it.key());
    if (h == handlers.end()) throw ConfigError("unknown config key '" + path + "'");
    h->second(it.value(), path);
  }
}

}  // namespace

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  if (!config.is_object()) config = json::object();
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    node = &child;
    start = dot + 1;
  }
}

SweepSpec spec_from_json(const json& config, SweepKind kind) {
  SweepSpec s = kind == SweepKind::Rate ? SweepSpec::rate_defaults() : SweepSpec::estimation_defaults();
  auto num = [](double& dst) { return [&dst](const json& v, const std::string& p) { dst = as_number(v, p); }; };
  auto integer = [](int& dst) { return [&dst](const json& v, const std::string& p) { dst = as_int(v, p); }; };

  const std::map<std::string, Handler> gd = {
      {"max_iters", integer(s.gd.max_iters)},     {"step_init", num(s.gd.step_init)},
      {"armijo_c", num(s.gd.armijo_c)},           {"backtrack_ratio", num(s.gd.backtrack_ratio)},
      {"grad_tol", num(s.gd.grad_tol)},           {"restarts", integer(s.gd.restarts)},
  };
  const std::map<std::string, Handler> sdr = {
      {"randomizations", integer(s.sdr_randomizations)},
      {"max_sweeps", integer(s.sdp.max_sweeps)},
      {"tolerance", num(s.sdp.tolerance)},
      {"restarts", integer(s.sdp.restarts)},
      {"rank", integer(s.sdp.rank)},
  };
  const std::map<std::string, Handler> oracle = {{"grid", integer(s.oracle_grid)}};
  const std::map<std::string, Handler> estimation = {
      {"prior_var", num(s.estimation.prior_var)},
      {"error_scale", num(s.estimation.error_scale)},
      {"reflect_rel_tol", num(s.estimation.reflect_rel_tol)},
      {"sigma_e_source",
       [&s](const json& v, const std::string& p) {
         const std::string mode = as_string(v, p);
         if (mode == "genie") {
           s.estimation.sigma_e_source = SigmaESource::Genie;
         } else if (mode == "blind") {
           s.estimation.sigma_e_source = SigmaESource::Blind;
         } else {
           fail(p, "expected \"genie\" or \"blind\"");
         }
       }},
  };
  const std::map<std::string, Handler> root = {
      {"antennas", integer(s.base.antennas)},
      {"signal_var", num(s.base.signal_var)},
      {"snr_db", [&s](const json& v, const std::string& p) { s.snr_db = as_list<double>(v, p, as_number); }},
      {"tau", [&s](const json& v, const std::string& p) { s.tau = as_list<int>(v, p, as_int); }},
      {"n", [&s](const json& v, const std::string& p) { s.n = as_list<int>(v, p, as_int); }},
      {"bits", [&s](const json& v, const std::string& p) { s.bits = as_list<int>(v, p, as_int); }},
      {"methods", [&s](const json& v, const std::string& p) { s.methods = as_list<std::string>(v, p, as_string); }},
      {"trials", integer(s.trials)},
      {"master_seed", [&s](const json& v, const std::string& p) { s.master_seed = as_u64(v, p); }},
      {"gd", [&gd](const json& v, const std::string& p) { consume(v, p, gd); }},
      {"sdr", [&sdr](const json& v, const std::string& p) { consume(v, p, sdr); }},
      {"oracle", [&oracle](const json& v, const std::string& p) { consume(v, p, oracle); }},
      {"estimation", [&estimation](const json& v, const std::string& p) { consume(v, p, estimation); }},
  };
  if (!config.is_null()) consume(config, "", root);

  std::vector<std::string_view> allowed;
  if (kind == SweepKind::Rate) {
    allowed.assign(std::begin(kRateMethods), std::end(kRateMethods));
  } else {
    allowed.assign(std::begin(kEstimationMethods), std::end(kEstimationMethods));
  }
  try {
    s.validate(allowed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

}  // namespace irsq::cli
