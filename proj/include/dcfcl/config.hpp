#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dcfcl/simulator.hpp"

namespace dcfcl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Run configuration plus CLI-only settings. Parsing is strict: unknown keys
/// and wrongly typed values raise ConfigError naming the offending key path.
struct CliConfig {
  RunConfig run;
  std::string output_dir = "dcfcl_out";
  int verbosity = 1;
};

CliConfig cli_config_from_json(const nlohmann::json& doc);
CliConfig load_cli_config(const std::string& path);

nlohmann::json run_config_to_json(const RunConfig& config);

}  // namespace dcfcl
