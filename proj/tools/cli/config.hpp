// JSON sweep configuration: loading, dotted-path overrides and conversion
// to SweepSpec. Every key is either consumed or rejected.

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "irsq/experiments.hpp"

namespace irsq::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SweepKind { Rate, Estimation };

nlohmann::json load_config_file(const std::string& path);

/// Applies "a.b.c=value". The value is read as JSON when it parses and as a
/// plain string otherwise, so `methods=gd` and `snr_db=[0,10]` both work.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Defaults of the sweep kind overlaid with `config`. Throws ConfigError on
/// unknown keys, wrong types and values SweepSpec::validate rejects.
SweepSpec spec_from_json(const nlohmann::json& config, SweepKind kind);

}  // namespace irsq::cli
