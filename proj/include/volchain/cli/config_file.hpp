#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "volchain/domain/errors.hpp"
#include "volchain/sim/config.hpp"

namespace volchain::cli {

/// A configuration problem, already formatted as `<file>:<line>: <message>`
/// when a line can be named.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct LoadedConfig {
  sim::ScenarioConfig cfg;
  std::string name;                              // file name used in diagnostics
  std::map<std::string, int, std::less<>> lines;  // dotted key -> 1-based line
  bool seed_given = false;
};

/// Reads a YAML file whose nested sections mirror the dotted configuration
/// keys. Keys not present keep their defaults. Unknown keys, unparseable
/// values and failed validation throw ConfigError anchored at the line of
/// the offending key (validation errors on keys absent from the file carry
/// no line).
LoadedConfig load_config_text(std::string_view text, std::string_view name);
LoadedConfig load_config_file(const std::filesystem::path& path);

/// Re-anchors a ValidationError raised by sim::validate on a loaded config.
[[noreturn]] void rethrow_anchored(const LoadedConfig& loaded, const ValidationError& e);

/// Every key in schema order as nested YAML. Loading the output yields a
/// configuration with the same hash.
std::string dump_config_yaml(const sim::ScenarioConfig& cfg);

}  // namespace volchain::cli
