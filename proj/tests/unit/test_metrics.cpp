#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "volchain/sim/metrics.hpp"

using namespace volchain;
using namespace volchain::sim;

namespace {

MetricsFrame frame(gen::Rng& rng, Mode mode) {
  MetricsFrame m;
  m.mode = mode;
  m.seed = gen::below(rng, 1000);
  m.ue_count = 100 + gen::below(rng, 400);
  m.batch_size = gen::below(rng, 101);
  m.tasks_per_request = 5 + gen::below(rng, 6);
  m.cpu_usage = gen::grid(rng, 0.0, 1.0, 0.001);
  m.energy_j = gen::grid(rng, 0.0, 500.0, 0.25);
  m.hit_ratio = gen::grid(rng, 0.0, 1.0, 0.01);
  m.delay_s = gen::grid(rng, 0.0, 20.0, 0.001);
  m.rewards_ue = gen::grid(rng, 0.0, 400.0, 0.5);
  m.rewards_miner = gen::grid(rng, 0.0, 100.0, 0.5);
  return m;
}

// Only the columns that travel through the CSV.
bool same_columns(const MetricsFrame& a, const MetricsFrame& b) {
  return a.mode == b.mode && a.seed == b.seed && a.ue_count == b.ue_count && a.batch_size == b.batch_size &&
         a.tasks_per_request == b.tasks_per_request && a.cpu_usage == b.cpu_usage && a.energy_j == b.energy_j &&
         a.hit_ratio == b.hit_ratio && a.delay_s == b.delay_s && a.rewards_ue == b.rewards_ue &&
         a.rewards_miner == b.rewards_miner;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("metrics csv starts with its schema and the fixed header") {
    gen::Rng rng(81);
    const MetricsFrame rows[] = {frame(rng, Mode::incentive_bc1)};
    const auto text = metrics_csv(rows);
    CHECK(text.rfind("#schema=metrics/1\n", 0) == 0);
    CHECK(csv_schema(text) == "metrics/1");
    const auto t = parse_csv(text, kMetricsSchema);
    CHECK(t.header == metrics_columns());
    CHECK(t.header.front() == "mode");
    CHECK(t.rows.size() == 1);
  }

  TEST_CASE("metrics rows round-trip") {
    gen::Rng rng(82);
    std::vector<MetricsFrame> rows;
    for (int i = 0; i < 200; ++i) rows.push_back(frame(rng, kAllModes[gen::below(rng, 4)]));
    const auto back = read_metrics_csv(metrics_csv(rows));
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(same_columns(rows[i], back[i]));
    CHECK(metrics_csv(back) == metrics_csv(rows));
  }

  TEST_CASE("schema mismatch names both versions") {
    gen::Rng rng(83);
    const MetricsFrame rows[] = {frame(rng, Mode::non_bc)};
    auto text = metrics_csv(rows);
    text.replace(0, std::string("#schema=metrics/1").size(), "#schema=metrics/0");
    try {
      (void)read_metrics_csv(text);
      FAIL("accepted an old schema");
    } catch (const SchemaError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("metrics/1") != std::string::npos);
      CHECK(msg.find("metrics/0") != std::string::npos);
    }
    CHECK_THROWS_AS((void)parse_csv("mode,seed\nbc1,1\n", kMetricsSchema), SchemaError);
  }

  TEST_CASE("ragged rows are rejected") {
    CHECK_THROWS_AS((void)parse_csv("#schema=x/1\na,b\n1\n", "x/1"), ValidationError);
  }

  TEST_CASE("fields with commas, quotes and newlines are quoted") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    const std::string text = "#schema=x/1\nwhat,why\n" + csv_field("a,b") + "," + csv_field("line\nbreak \"q\"") + "\n";
    const auto t = parse_csv(text, "x/1");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][0] == "a,b");
    CHECK(t.rows[0][1] == "line\nbreak \"q\"");
  }

  TEST_CASE("sweep cells hold the sample mean and sample deviation") {
    gen::Rng rng(84);
    std::vector<SweepRun> runs;
    for (const char* value : {"10", "20"}) {
      for (std::size_t rep = 0; rep < 4; ++rep) {
        for (const auto mode : kAllModes) runs.push_back({value, rep, frame(rng, mode)});
      }
    }
    const auto cells = aggregate_sweep("requests.batch_size", runs);
    REQUIRE(cells.size() == 8);
    CHECK(cells[0].value == "10");
    CHECK(cells[0].mode == Mode::incentive_bc1);
    CHECK(cells[4].value == "20");
    for (const auto& c : cells) {
      CHECK(c.reps == 4);
      std::vector<double> xs;
      for (const auto& r : runs) {
        if (r.value == c.value && r.metrics.mode == c.mode) xs.push_back(r.metrics.hit_ratio);
      }
      double mean = 0.0;
      for (double x : xs) mean += x / xs.size();
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      CHECK(c.mean[2] == doctest::Approx(mean).epsilon(1e-12));
      CHECK(c.sd[2] == doctest::Approx(std::sqrt(ss / (xs.size() - 1))).epsilon(1e-12));
    }
  }

  TEST_CASE("single repetition has zero deviation") {
    gen::Rng rng(85);
    const SweepRun runs[] = {{"1", 0, frame(rng, Mode::non_bc)}};
    const auto cells = aggregate_sweep("p", runs);
    REQUIRE(cells.size() == 1);
    for (double sd : cells[0].sd) CHECK(sd == 0.0);
  }

  TEST_CASE("sweep csv round-trips with paired mean and sd columns") {
    gen::Rng rng(86);
    std::vector<SweepRun> runs;
    for (std::size_t rep = 0; rep < 3; ++rep) {
      for (const auto mode : kAllModes) runs.push_back({"0.5", rep, frame(rng, mode)});
    }
    const auto cells = aggregate_sweep("requests.rare_fraction", runs);
    const auto text = sweep_csv(cells);
    CHECK(csv_schema(text) == kSweepSchema);
    const auto header = parse_csv(text, kSweepSchema).header;
    for (const auto q : kSweepQuantities) {
      CHECK(std::find(header.begin(), header.end(), std::string(q) + "_mean") != header.end());
      CHECK(std::find(header.begin(), header.end(), std::string(q) + "_sd") != header.end());
    }
    CHECK(sweep_csv(read_sweep_csv(text)) == text);
  }

  TEST_CASE("runs csv has one row per run") {
    gen::Rng rng(87);
    std::vector<SweepRun> runs;
    for (std::size_t rep = 0; rep < 5; ++rep) runs.push_back({"7", rep, frame(rng, Mode::incentive_bc2)});
    const auto t = parse_csv(runs_csv("requests.tasks_max", runs), kRunsSchema);
    CHECK(t.rows.size() == 5);
    CHECK(t.header[0] == "parameter");
    CHECK(t.rows[3][2] == "3");
  }
}
