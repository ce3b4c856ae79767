#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "volchain/domain/errors.hpp"
#include "volchain/sim/engine.hpp"

namespace volchain::sim {

// Every CSV starts with a `#schema=<name>/<version>` line, then a header row.
inline constexpr std::string_view kMetricsSchema = "metrics/1";
inline constexpr std::string_view kRequestsSchema = "requests/1";
inline constexpr std::string_view kRunsSchema = "runs/1";
inline constexpr std::string_view kSweepSchema = "sweep/1";

/// A CSV whose schema line is missing or names another version.
class SchemaError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct CsvTable {
  std::string schema;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws ValidationError if absent
};

/// Quotes a field when it holds a comma, quote or line break.
std::string csv_field(std::string_view s);

/// Parses a schema-tagged CSV. Throws SchemaError when the schema line is
/// missing, or when `expected` is non-empty and differs; the message names
/// both versions. Throws ValidationError on ragged rows.
CsvTable parse_csv(std::string_view text, std::string_view expected = {});

/// The schema named on the first line, or empty.
std::string csv_schema(std::string_view text);

/// The fixed metric columns, in order.
const std::vector<std::string>& metrics_columns();

std::string metrics_csv(std::span<const MetricsFrame> rows);
std::vector<MetricsFrame> read_metrics_csv(std::string_view text);

/// Per-request rows of every run, led by the run's mode.
std::string requests_csv(std::span<const RunOutput> runs);

/// One run of a sweep: the swept value (as text) and the repetition index.
struct SweepRun {
  std::string value;
  std::size_t rep = 0;
  MetricsFrame metrics;
};

/// Per-run rows of a sweep: parameter, value, rep, then the metric columns.
std::string runs_csv(std::string_view parameter, std::span<const SweepRun> runs);

/// The six aggregated quantities, in column order.
inline constexpr std::array<std::string_view, 6> kSweepQuantities{"cpu_usage", "energy_j",   "hit_ratio",
                                                                  "delay_s",   "rewards_ue", "rewards_miner"};

struct SweepCell {
  std::string parameter;
  std::string value;
  Mode mode = Mode::incentive_bc1;
  std::size_t reps = 0;
  std::size_t ue_count = 0;
  std::size_t batch_size = 0;
  std::size_t tasks_per_request = 0;
  std::array<double, 6> mean{};
  std::array<double, 6> sd{};  // sample standard deviation; 0 for a single rep
};

/// Groups runs by (value, mode); values keep their first-seen order and
/// modes their canonical order.
std::vector<SweepCell> aggregate_sweep(std::string_view parameter, std::span<const SweepRun> runs);

std::string sweep_csv(std::span<const SweepCell> cells);
std::vector<SweepCell> read_sweep_csv(std::string_view text);

}  // namespace volchain::sim
