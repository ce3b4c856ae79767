#include "volchain/cli/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "volchain/chain/chain_io.hpp"
#include "volchain/cli/config_file.hpp"
#include "volchain/domain/text_record.hpp"
#include "volchain/sim/engine.hpp"
#include "volchain/sim/metrics.hpp"

namespace volchain::cli {

namespace fs = std::filesystem;

namespace {

/// Output could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

void write_file(const fs::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError(path.parent_path().string() + ": " + ec.message());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path.string() + ": cannot open for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  f.close();
  if (!f) throw IoError(path.string() + ": write failed");
}

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Seed precedence: flag, then VOLCHAIN_SEED, then the file.
void apply_seed(LoadedConfig& loaded, const std::optional<std::uint64_t>& flag) {
  if (flag) {
    loaded.cfg.run.seed = *flag;
    return;
  }
  if (const auto s = env("VOLCHAIN_SEED")) {
    loaded.cfg.run.seed = parse_uint(*s, "VOLCHAIN_SEED");
    return;
  }
  if (!loaded.seed_given) {
    throw ConfigError(loaded.name + ": run.seed is not set (set it in the file, pass --seed or VOLCHAIN_SEED)");
  }
}

void apply_overrides(LoadedConfig& loaded, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    const auto key = s.substr(0, eq);
    try {
      sim::set_field(loaded.cfg, key, s.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("--set: ") + e.what());
    }
    if (key == "run.seed") loaded.seed_given = true;
  }
  try {
    sim::validate(loaded.cfg);
  } catch (const ValidationError& e) {
    rethrow_anchored(loaded, e);
  }
}

fs::path out_dir(const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (const auto e = env("VOLCHAIN_OUT")) return *e;
  return fallback;
}

std::string chain_file_name(const chain::Chain& c) {
  std::string name = c.request_id.str();
  for (auto& ch : name) {
    if (ch == '/' || ch == '\\') ch = '_';
  }
  return name + ".chain";
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string mode;
  bool all_modes = false;
  bool event_log = false;
  bool dump = false;
  std::vector<std::string> sets;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  auto loaded = load_config_file(a.config);
  apply_overrides(loaded, a.sets);
  apply_seed(loaded, a.seed);
  if (!a.mode.empty()) {
    const auto m = sim::parse_mode(a.mode);
    if (!m) throw ConfigError("--mode: unknown mode '" + a.mode + "'");
    loaded.cfg.run.mode = *m;
  }
  if (a.event_log) loaded.cfg.run.event_log = true;
  const auto& cfg = loaded.cfg;
  if (a.dump) {
    out << dump_config_yaml(cfg);
    return kExitOk;
  }

  std::vector<sim::Mode> modes{cfg.run.mode};
  if (a.all_modes) modes.assign(sim::kAllModes.begin(), sim::kAllModes.end());
  std::vector<sim::RunOutput> runs;
  for (const auto m : modes) {
    auto c = cfg;
    c.run.mode = m;
    runs.push_back(sim::run_scenario(c));
  }

  const fs::path dir = out_dir(a.out, "out");
  std::vector<sim::MetricsFrame> frames;
  for (const auto& r : runs) frames.push_back(r.metrics);
  write_file(dir / "metrics.csv", sim::metrics_csv(frames));
  write_file(dir / "requests.csv", sim::requests_csv(runs));
  write_file(dir / "config.yaml", dump_config_yaml(cfg));
  for (const auto& r : runs) {
    const std::string mode(sim::to_string(r.metrics.mode));
    for (const auto& c : r.chains) write_file(dir / "chains" / mode / chain_file_name(c), chain::export_chain(c));
    if (cfg.run.event_log) {
      std::string log;
      for (const auto& rec : r.log) log += rec.to_line() + "\n";
      write_file(dir / ("events-" + mode + ".log"), log);
    }
  }

  TextRecord manifest;
  manifest.set("config_hash", sim::config_hash(cfg));
  manifest.set_uint("seed", cfg.run.seed);
  manifest.set_int("config_schema", sim::kConfigSchemaVersion);
  manifest.set("metrics_schema", std::string(sim::kMetricsSchema));
  manifest.set("requests_schema", std::string(sim::kRequestsSchema));
  std::string mode_list;
  for (const auto m : modes) mode_list += (mode_list.empty() ? "" : ",") + std::string(sim::to_string(m));
  manifest.set("modes", mode_list);
  write_file(dir / "manifest.txt", manifest.to_text());

  for (const auto& f : frames) {
    out << sim::to_string(f.mode) << ": hit " << fmt("%.3f", f.hit_ratio) << ", delay " << fmt("%.3f", f.delay_s)
        << " s, energy " << fmt("%.1f", f.energy_j) << " J, cpu " << fmt("%.3f", f.cpu_usage) << "\n";
  }
  out << "wrote " << dir.string() << "\n";
  return kExitOk;
}

struct SweepSpec {
  fs::path base;
  std::string parameter;
  std::vector<std::string> values;
  std::size_t repetitions = 1;
  std::string out;
  std::vector<sim::Mode> modes{sim::kAllModes.begin(), sim::kAllModes.end()};
};

SweepSpec load_sweep_spec(const fs::path& path) {
  const auto text = read_file(path);
  if (!text) throw ConfigError(path.string() + ": cannot read sweep spec");
  const std::string name = path.string();
  YAML::Node root;
  try {
    root = YAML::Load(*text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(name + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(name + ": expected a mapping");
  SweepSpec s;
  bool have_base = false, have_param = false, have_values = false;
  for (const auto& kv : root) {
    const std::string key = kv.first.Scalar();
    const std::string at = name + ":" + std::to_string(kv.first.Mark().line + 1) + ": ";
    const auto& v = kv.second;
    if (key == "base") {
      s.base = path.parent_path() / v.Scalar();
      have_base = true;
    } else if (key == "parameter") {
      s.parameter = v.Scalar();
      have_param = true;
    } else if (key == "values") {
      if (!v.IsSequence()) throw ConfigError(at + "values must be a list");
      for (const auto& x : v) s.values.push_back(x.Scalar());
      have_values = true;
    } else if (key == "repetitions") {
      s.repetitions = parse_uint(v.Scalar(), "repetitions");
    } else if (key == "out") {
      s.out = v.Scalar();
    } else if (key == "modes") {
      if (!v.IsSequence()) throw ConfigError(at + "modes must be a list");
      s.modes.clear();
      for (const auto& x : v) {
        const auto m = sim::parse_mode(x.Scalar());
        if (!m) throw ConfigError(at + "unknown mode '" + x.Scalar() + "'");
        s.modes.push_back(*m);
      }
    } else {
      throw ConfigError(at + "unknown sweep key '" + key + "'");
    }
  }
  if (!have_base) throw ConfigError(name + ": sweep spec needs 'base'");
  if (!have_param) throw ConfigError(name + ": sweep spec needs 'parameter'");
  if (!have_values || s.values.empty()) throw ConfigError(name + ": sweep spec needs a non-empty 'values' list");
  if (s.repetitions < 1) throw ConfigError(name + ": repetitions must be at least 1");
  if (s.modes.empty()) throw ConfigError(name + ": modes must not be empty");
  if (sim::find_field(s.parameter) == nullptr) throw ConfigError(name + ": unknown parameter '" + s.parameter + "'");
  if (s.parameter == "run.mode") throw ConfigError(name + ": run.mode is swept through 'modes'");
  return s;
}

struct SweepArgs {
  std::string spec;
  std::string out;
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  const auto spec = load_sweep_spec(a.spec);
  auto loaded = load_config_file(spec.base);
  apply_seed(loaded, a.seed);

  struct Job {
    sim::ScenarioConfig cfg;
    sim::SweepRun run;
  };
  std::vector<Job> jobs;
  for (const auto& value : spec.values) {
    auto cfg = loaded.cfg;
    try {
      sim::set_field(cfg, spec.parameter, value);
      sim::validate(cfg);
    } catch (const ValidationError& e) {
      throw ConfigError(spec.parameter + "=" + value + ": " + e.what());
    }
    for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
      for (const auto m : spec.modes) {
        Job j{cfg, {value, rep, {}}};
        j.cfg.run.mode = m;
        j.cfg.run.seed = loaded.cfg.run.seed + rep;
        j.cfg.run.event_log = false;
        jobs.push_back(std::move(j));
      }
    }
  }

  // Runs share nothing; each worker fills its own slots.
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        jobs[i].run.metrics = sim::run_scenario(jobs[i].cfg).metrics;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n = a.jobs != 0 ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, jobs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Single writer from here on.
  std::vector<sim::SweepRun> runs;
  for (auto& j : jobs) runs.push_back(std::move(j.run));
  const auto cells = sim::aggregate_sweep(spec.parameter, runs);
  const fs::path dir = out_dir(a.out, spec.out.empty() ? "sweep-out" : spec.out);
  write_file(dir / "runs.csv", sim::runs_csv(spec.parameter, runs));
  write_file(dir / "sweep.csv", sim::sweep_csv(cells));
  write_file(dir / "config.yaml", dump_config_yaml(loaded.cfg));
  TextRecord manifest;
  manifest.set("config_hash", sim::config_hash(loaded.cfg));
  manifest.set_uint("seed", loaded.cfg.run.seed);
  manifest.set_int("config_schema", sim::kConfigSchemaVersion);
  manifest.set("runs_schema", std::string(sim::kRunsSchema));
  manifest.set("sweep_schema", std::string(sim::kSweepSchema));
  manifest.set("parameter", spec.parameter);
  manifest.set_uint("repetitions", spec.repetitions);
  std::string values;
  for (const auto& v : spec.values) values += (values.empty() ? "" : ",") + v;
  manifest.set("values", values);
  write_file(dir / "manifest.txt", manifest.to_text());
  out << runs.size() << " runs, " << cells.size() << " cells; wrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_verify(const std::string& path, std::ostream& out, std::ostream& err) {
  const auto text = read_file(path);
  if (!text) {
    err << path << ": cannot read\n";
    return kExitBadInput;
  }
  if (text->empty()) {
    err << path << ": empty file\n";
    return kExitBadInput;
  }
  const auto check = chain::verify_chain_text(*text);
  switch (check.result) {
    case chain::ChainCheck::Result::ok: out << path << ": ok\n"; return kExitOk;
    case chain::ChainCheck::Result::broken:
      out << path << ": broken";
      if (check.block) out << " at block " << *check.block;
      out << ": " << check.reason << "\n";
      return kExitFailed;
    case chain::ChainCheck::Result::malformed: err << path << ": malformed: " << check.reason << "\n"; return kExitBadInput;
  }
  return kExitBadInput;
}

int cmd_validate(const std::string& path, const std::vector<std::string>& sets, std::ostream& out) {
  auto loaded = load_config_file(path);
  apply_overrides(loaded, sets);
  out << path << ": ok, config_hash " << sim::config_hash(loaded.cfg) << "\n";
  if (!loaded.seed_given) out << path << ": note: run.seed is not set; runs need --seed or VOLCHAIN_SEED\n";
  return kExitOk;
}

void print_row(std::ostream& out, const std::vector<std::string>& cells, const std::vector<int>& widths) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::string c = cells[i];
    if (static_cast<int>(c.size()) < widths[i]) c.insert(0, static_cast<std::size_t>(widths[i]) - c.size(), ' ');
    out << (i == 0 ? "" : "  ") << c;
  }
  out << "\n";
}

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<int> w(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) w[i] = static_cast<int>(header[i].size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], static_cast<int>(r[i].size()));
  }
  print_row(out, header, w);
  for (const auto& r : rows) print_row(out, r, w);
}

std::vector<std::string> metric_cells(const sim::MetricsFrame& m) {
  return {std::string(sim::to_string(m.mode)), std::to_string(m.seed), fmt("%.4f", m.cpu_usage), fmt("%.1f", m.energy_j),
          fmt("%.3f", m.hit_ratio), fmt("%.3f", m.delay_s), fmt("%.1f", m.rewards_ue), fmt("%.1f", m.rewards_miner)};
}

int cmd_report(const std::string& path, std::ostream& out, std::ostream& err) {
  const auto text = read_file(path);
  if (!text) {
    err << path << ": cannot read\n";
    return kExitBadInput;
  }
  const auto schema = sim::csv_schema(*text);
  const std::vector<std::string> metric_header{"mode", "seed", "cpu", "energy_j", "hit", "delay_s", "rewards_ue",
                                               "rewards_miner"};
  if (schema == sim::kMetricsSchema) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : sim::read_metrics_csv(*text)) rows.push_back(metric_cells(m));
    print_table(out, metric_header, rows);
  } else if (schema == sim::kSweepSchema) {
    std::vector<std::string> header{"parameter", "value", "mode", "reps"};
    for (const auto q : sim::kSweepQuantities) header.emplace_back(q);
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : sim::read_sweep_csv(*text)) {
      std::vector<std::string> r{c.parameter, c.value, std::string(sim::to_string(c.mode)), std::to_string(c.reps)};
      for (std::size_t k = 0; k < c.mean.size(); ++k) r.push_back(fmt("%.4g", c.mean[k]) + " +- " + fmt("%.2g", c.sd[k]));
      rows.push_back(std::move(r));
    }
    print_table(out, header, rows);
  } else if (schema == sim::kRunsSchema || schema == sim::kRequestsSchema) {
    const auto t = sim::parse_csv(*text, schema);
    print_table(out, t.header, t.rows);
  } else {
    err << path << ": unsupported schema '" << (schema.empty() ? "<none>" : schema) << "'; expected one of "
        << sim::kMetricsSchema << ", " << sim::kSweepSchema << ", " << sim::kRunsSchema << ", "
        << sim::kRequestsSchema << "\n";
    return kExitBadInput;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Volunteer service composition simulator"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "run one scenario and write metrics, chains and a manifest");
  run->add_option("config", ra.config, "scenario configuration (YAML)")->required();
  run->add_option("--seed", ra.seed, "override run.seed");
  run->add_option("--out", ra.out, "output directory (default: out)");
  run->add_option("--mode", ra.mode, "override run.mode");
  run->add_flag("--all-modes", ra.all_modes, "run every mode on the same scenario");
  run->add_flag("--event-log", ra.event_log, "write the event log for audit");
  run->add_option("--set", ra.sets, "override one key, e.g. --set population.ue_count=200");
  run->add_flag("--dump-effective-config", ra.dump, "print the effective configuration and exit");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep and aggregate it");
  sweep->add_option("spec", sa.spec, "sweep spec (YAML)")->required();
  sweep->add_option("--out", sa.out, "output directory");
  sweep->add_option("--seed", sa.seed, "base seed; repetition r uses seed + r");
  sweep->add_option("--jobs", sa.jobs, "parallel runs (default: hardware threads)");

  std::string verify_path;
  auto* verify = app.add_subcommand("verify", "check an exported chain file");
  verify->add_option("chain", verify_path, "chain file")->required();

  std::string validate_path;
  std::vector<std::string> validate_sets;
  auto* validate = app.add_subcommand("validate-config", "check a configuration without running it");
  validate->add_option("config", validate_path, "scenario configuration (YAML)")->required();
  validate->add_option("--set", validate_sets, "override one key");

  std::string report_path;
  auto* report = app.add_subcommand("report", "print a CSV produced by run or sweep as a table");
  report->add_option("csv", report_path, "metrics, runs, sweep or requests CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (*run) return cmd_run(ra, out);
    if (*sweep) return cmd_sweep(sa, out);
    if (*verify) return cmd_verify(verify_path, out, err);
    if (*validate) return cmd_validate(validate_path, validate_sets, out);
    if (*report) return cmd_report(report_path, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const YAML::Exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitFailed;
  }
  return kExitBadInput;
}

}  // namespace volchain::cli
