#pragma once

// Flat JSON configuration mirroring SimConfig.  See docs/config.md for the
// schema; every key is optional and defaults to the reference deployment.

#include <string>
#include <vector>

#include "keysim/domain.hpp"

namespace keysim {

struct LoadedConfig {
  SimConfig config;
  bool seed_given = false;
};

/// Problems found while reading a config document.  `problems()` lists
/// every offending field, not just the first.
class ConfigError : public InvalidConfig {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parses a JSON document.  Throws ConfigError on syntax errors, unknown
/// keys or wrongly typed values.  Does not check cross-field invariants;
/// call SimConfig::violations() for those.
LoadedConfig parse_config(const std::string& text);

/// Reads and parses a file.  Throws ConfigError if it cannot be opened.
LoadedConfig load_config(const std::string& path);

/// Normalized echo: every key, in schema order, pretty-printed.
std::string config_to_json(const SimConfig& config);

std::vector<std::string> config_keys();

}  // namespace keysim
