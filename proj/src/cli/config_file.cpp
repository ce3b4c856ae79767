#include "volchain/cli/config_file.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include <yaml-cpp/yaml.h>

namespace volchain::cli {

namespace {

std::string anchored(std::string_view name, int line, std::string_view what) {
  std::string out(name);
  if (line > 0) out += ":" + std::to_string(line);
  out += ": ";
  out += what;
  return out;
}

void walk(const YAML::Node& node, const std::string& prefix, LoadedConfig& out) {
  for (const auto& kv : node) {
    const int line = kv.first.Mark().line + 1;
    if (!kv.first.IsScalar()) throw ConfigError(anchored(out.name, line, "keys must be plain names"));
    const std::string key = prefix.empty() ? kv.first.Scalar() : prefix + "." + kv.first.Scalar();
    const YAML::Node& value = kv.second;
    if (value.IsMap()) {
      walk(value, key, out);
      continue;
    }
    if (!value.IsScalar()) {
      throw ConfigError(anchored(out.name, line, "'" + key + "' needs a single value"));
    }
    if (out.lines.count(key) != 0) throw ConfigError(anchored(out.name, line, "duplicate key '" + key + "'"));
    try {
      sim::set_field(out.cfg, key, value.Scalar());
    } catch (const ValidationError& e) {
      throw ConfigError(anchored(out.name, line, e.what()));
    }
    out.lines.emplace(key, line);
    if (key == "run.seed") out.seed_given = true;
  }
}

}  // namespace

LoadedConfig load_config_text(std::string_view text, std::string_view name) {
  LoadedConfig out;
  out.name = std::string(name);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(anchored(out.name, e.mark.line + 1, e.msg));
  }
  if (root.IsNull()) return out;  // empty file: all defaults
  if (!root.IsMap()) throw ConfigError(anchored(out.name, root.Mark().line + 1, "expected a mapping of sections"));
  walk(root, "", out);
  try {
    sim::validate(out.cfg);
  } catch (const ValidationError& e) {
    rethrow_anchored(out, e);
  }
  return out;
}

LoadedConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot read configuration");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str(), path.string());
}

void rethrow_anchored(const LoadedConfig& loaded, const ValidationError& e) {
  const std::string_view msg = e.what();
  int line = 0;
  std::size_t best = 0;
  // Messages lead with the offending key; pick the longest key that prefixes it.
  for (const auto& [key, l] : loaded.lines) {
    if (msg.starts_with(key) && key.size() > best) {
      best = key.size();
      line = l;
    }
  }
  throw ConfigError(anchored(loaded.name, line, msg));
}

std::string dump_config_yaml(const sim::ScenarioConfig& cfg) {
  // The schema lists each section's keys contiguously, so one pass with a
  // stack of open sections emits the nesting.
  YAML::Emitter em;
  em << YAML::BeginMap;
  std::vector<std::string> open;
  for (const auto& f : sim::config_schema()) {
    std::vector<std::string> parts;
    std::string_view rest = f.key;
    for (auto dot = rest.find('.'); dot != std::string_view::npos; dot = rest.find('.')) {
      parts.emplace_back(rest.substr(0, dot));
      rest.remove_prefix(dot + 1);
    }
    std::size_t common = 0;
    while (common < open.size() && common < parts.size() && open[common] == parts[common]) ++common;
    while (open.size() > common) {
      em << YAML::EndMap;
      open.pop_back();
    }
    for (std::size_t i = common; i < parts.size(); ++i) {
      em << YAML::Key << parts[i] << YAML::Value << YAML::BeginMap;
      open.push_back(parts[i]);
    }
    em << YAML::Key << std::string(rest) << YAML::Value << f.get(cfg);
  }
  while (!open.empty()) {
    em << YAML::EndMap;
    open.pop_back();
  }
  em << YAML::EndMap;
  return std::string(em.c_str()) + "\n";
}

}  // namespace volchain::cli
