#include <doctest.h>

#include "volchain/cli/config_file.hpp"
#include "volchain/sim/config.hpp"

using namespace volchain;
using namespace volchain::cli;

namespace {

std::string error_of(std::string_view text) {
  try {
    (void)load_config_text(text, "cfg.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("empty file gives the defaults") {
    const auto l = load_config_text("", "cfg.yaml");
    CHECK(sim::config_hash(l.cfg) == sim::config_hash(sim::ScenarioConfig{}));
    CHECK_FALSE(l.seed_given);
  }

  TEST_CASE("nested sections set dotted keys and remember their lines") {
    const auto l = load_config_text("run:\n  seed: 9\n  mode: non-bc\nrequests:\n  batch_size: 40\n", "cfg.yaml");
    CHECK(l.cfg.run.seed == 9);
    CHECK(l.seed_given);
    CHECK(l.cfg.run.mode == sim::Mode::non_bc);
    CHECK(l.cfg.requests.batch_size == 40);
    CHECK(l.lines.at("requests.batch_size") == 5);
  }

  TEST_CASE("errors point at the offending line") {
    CHECK(error_of("run:\n  seed: 1\nnetwork:\n  bogus: 3\n").rfind("cfg.yaml:4: ", 0) == 0);
    CHECK(error_of("requests:\n  batch_size: many\n").rfind("cfg.yaml:2: ", 0) == 0);
    CHECK(error_of("run:\n  seed: 1\n  seed: 2\n").find("duplicate") != std::string::npos);
    CHECK(error_of("run: [1, 2]\n").rfind("cfg.yaml:1: ", 0) == 0);
    CHECK(error_of("- a\n- b\n").find("mapping") != std::string::npos);
  }

  TEST_CASE("validation failures are anchored at the key that caused them") {
    const auto msg = error_of("requests:\n  tasks_min: 3\n  tasks_max: 2\n");
    CHECK(msg.rfind("cfg.yaml:3: ", 0) == 0);
    CHECK(msg.find("requests.tasks_max") != std::string::npos);
  }

  TEST_CASE("dumped configuration loads back to the same hash") {
    sim::ScenarioConfig cfg;
    cfg.run.seed = 77;
    cfg.run.mode = sim::Mode::incentive_bc2;
    cfg.requests.rare_fraction = 0.125;
    cfg.network.bandwidth_bps = 11e6;
    cfg.reward.phi = 0.35;
    const auto text = dump_config_yaml(cfg);
    const auto back = load_config_text(text, "dump.yaml");
    CHECK(sim::config_hash(back.cfg) == sim::config_hash(cfg));
    CHECK(dump_config_yaml(back.cfg) == text);
    CHECK(back.lines.size() == sim::config_schema().size());
  }

  TEST_CASE("every schema key appears in the dump") {
    const auto text = dump_config_yaml(sim::ScenarioConfig{});
    for (const auto& f : sim::config_schema()) {
      const auto leaf = f.key.substr(f.key.rfind('.') + 1);
      CHECK(text.find(leaf + ":") != std::string::npos);
    }
  }
}
