#include "volchain/sim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "volchain/domain/text_record.hpp"

namespace volchain::sim {

namespace {

constexpr std::string_view kSchemaPrefix = "#schema=";

std::string schema_line(std::string_view schema) { return std::string(kSchemaPrefix) + std::string(schema) + "\n"; }

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_field(fields[i]);
  }
  out += '\n';
  return out;
}

// Splits the body into records, honouring quoted fields.
std::vector<std::vector<std::string>> split_records(std::string_view text, std::size_t first_line) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  std::size_t line = first_line;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      any = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        fields.push_back(std::move(field));
        records.push_back(std::move(fields));
      }
      fields.clear();
      field.clear();
      any = false;
      ++line;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw ValidationError("csv line " + std::to_string(line) + ": unterminated quoted field");
  if (any || !field.empty()) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  return records;
}

std::vector<std::string> metrics_fields(const MetricsFrame& m) {
  return {std::string(to_string(m.mode)),  std::to_string(m.seed),     std::to_string(m.ue_count),
          std::to_string(m.batch_size),    std::to_string(m.tasks_per_request),
          format_real(m.cpu_usage),        format_real(m.energy_j),    format_real(m.hit_ratio),
          format_real(m.delay_s),          format_real(m.rewards_ue),  format_real(m.rewards_miner)};
}

Mode mode_field(std::string_view text) {
  const auto m = parse_mode(text);
  if (!m) throw ValidationError("unknown mode '" + std::string(text) + "'");
  return *m;
}

std::array<double, 6> quantities(const MetricsFrame& m) {
  return {m.cpu_usage, m.energy_j, m.hit_ratio, m.delay_s, m.rewards_ue, m.rewards_miner};
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ValidationError("csv has no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_schema(std::string_view text) {
  if (!text.starts_with(kSchemaPrefix)) return {};
  const auto end = text.find_first_of("\r\n");
  auto schema = text.substr(kSchemaPrefix.size(), end == std::string_view::npos ? end : end - kSchemaPrefix.size());
  return std::string(schema);
}

CsvTable parse_csv(std::string_view text, std::string_view expected) {
  CsvTable t;
  t.schema = csv_schema(text);
  if (t.schema.empty()) {
    throw SchemaError("csv has no schema line; expected '" +
                      (expected.empty() ? std::string("#schema=<name>/<version>") : std::string(expected)) + "'");
  }
  if (!expected.empty() && t.schema != expected) {
    throw SchemaError("csv schema mismatch: expected '" + std::string(expected) + "', found '" + t.schema + "'");
  }
  const auto eol = text.find('\n');
  auto records = split_records(eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1), 2);
  if (records.empty()) throw ValidationError("csv has no header row");
  t.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != t.header.size()) {
      throw ValidationError("csv row " + std::to_string(i) + " has " + std::to_string(records[i].size()) +
                            " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[i]));
  }
  return t;
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{"mode",     "seed",      "ue_count", "batch_size",
                                             "tasks_per_request",    "cpu_usage", "energy_j",
                                             "hit_ratio", "delay_s",  "rewards_ue", "rewards_miner"};
  return cols;
}

std::string metrics_csv(std::span<const MetricsFrame> rows) {
  std::string out = schema_line(kMetricsSchema) + join(metrics_columns());
  for (const auto& m : rows) out += join(metrics_fields(m));
  return out;
}

std::vector<MetricsFrame> read_metrics_csv(std::string_view text) {
  const auto t = parse_csv(text, kMetricsSchema);
  if (t.header != metrics_columns()) throw ValidationError("metrics csv columns differ from " + std::string(kMetricsSchema));
  std::vector<MetricsFrame> out;
  for (const auto& r : t.rows) {
    MetricsFrame m;
    m.mode = mode_field(r[0]);
    m.seed = parse_uint(r[1], "seed");
    m.ue_count = parse_uint(r[2], "ue_count");
    m.batch_size = parse_uint(r[3], "batch_size");
    m.tasks_per_request = parse_uint(r[4], "tasks_per_request");
    m.cpu_usage = parse_real(r[5], "cpu_usage");
    m.energy_j = parse_real(r[6], "energy_j");
    m.hit_ratio = parse_real(r[7], "hit_ratio");
    m.delay_s = parse_real(r[8], "delay_s");
    m.rewards_ue = parse_real(r[9], "rewards_ue");
    m.rewards_miner = parse_real(r[10], "rewards_miner");
    out.push_back(m);
  }
  return out;
}

std::string requests_csv(std::span<const RunOutput> runs) {
  std::string out = schema_line(kRequestsSchema) + join({"mode", "id", "arrival", "kind", "complete", "delay_s", "tasks",
                                                         "mined_blocks", "reward", "failure"});
  for (const auto& run : runs) {
    const std::string mode(to_string(run.metrics.mode));
    for (const auto& r : run.requests) {
      out += join({mode, r.id, format_real(r.arrival), r.kind, r.complete ? "1" : "0", format_real(r.delay_s),
                   std::to_string(r.tasks), std::to_string(r.mined_blocks), format_real(r.reward), r.failure});
    }
  }
  return out;
}

std::string runs_csv(std::string_view parameter, std::span<const SweepRun> runs) {
  std::vector<std::string> header{"parameter", "value", "rep"};
  header.insert(header.end(), metrics_columns().begin(), metrics_columns().end());
  std::string out = schema_line(kRunsSchema) + join(header);
  for (const auto& run : runs) {
    std::vector<std::string> row{std::string(parameter), run.value, std::to_string(run.rep)};
    const auto m = metrics_fields(run.metrics);
    row.insert(row.end(), m.begin(), m.end());
    out += join(row);
  }
  return out;
}

std::vector<SweepCell> aggregate_sweep(std::string_view parameter, std::span<const SweepRun> runs) {
  std::vector<std::string> values;
  for (const auto& r : runs) {
    if (std::find(values.begin(), values.end(), r.value) == values.end()) values.push_back(r.value);
  }
  std::vector<SweepCell> cells;
  for (const auto& v : values) {
    for (const auto mode : kAllModes) {
      std::vector<const MetricsFrame*> group;
      for (const auto& r : runs) {
        if (r.value == v && r.metrics.mode == mode) group.push_back(&r.metrics);
      }
      if (group.empty()) continue;
      SweepCell c;
      c.parameter = std::string(parameter);
      c.value = v;
      c.mode = mode;
      c.reps = group.size();
      c.ue_count = group.front()->ue_count;
      c.batch_size = group.front()->batch_size;
      c.tasks_per_request = group.front()->tasks_per_request;
      const double n = static_cast<double>(group.size());
      for (const auto* m : group) {
        const auto q = quantities(*m);
        for (std::size_t k = 0; k < q.size(); ++k) c.mean[k] += q[k];
      }
      for (auto& x : c.mean) x /= n;
      if (group.size() > 1) {
        for (const auto* m : group) {
          const auto q = quantities(*m);
          for (std::size_t k = 0; k < q.size(); ++k) c.sd[k] += (q[k] - c.mean[k]) * (q[k] - c.mean[k]);
        }
        for (auto& x : c.sd) x = std::sqrt(x / (n - 1.0));
      }
      cells.push_back(std::move(c));
    }
  }
  return cells;
}

namespace {

std::vector<std::string> sweep_header() {
  std::vector<std::string> h{"parameter", "value", "mode", "reps", "ue_count", "batch_size", "tasks_per_request"};
  for (const auto q : kSweepQuantities) {
    h.push_back(std::string(q) + "_mean");
    h.push_back(std::string(q) + "_sd");
  }
  return h;
}

}  // namespace

std::string sweep_csv(std::span<const SweepCell> cells) {
  std::string out = schema_line(kSweepSchema) + join(sweep_header());
  for (const auto& c : cells) {
    std::vector<std::string> row{c.parameter,
                                 c.value,
                                 std::string(to_string(c.mode)),
                                 std::to_string(c.reps),
                                 std::to_string(c.ue_count),
                                 std::to_string(c.batch_size),
                                 std::to_string(c.tasks_per_request)};
    for (std::size_t k = 0; k < kSweepQuantities.size(); ++k) {
      row.push_back(format_real(c.mean[k]));
      row.push_back(format_real(c.sd[k]));
    }
    out += join(row);
  }
  return out;
}

std::vector<SweepCell> read_sweep_csv(std::string_view text) {
  const auto t = parse_csv(text, kSweepSchema);
  if (t.header != sweep_header()) throw ValidationError("sweep csv columns differ from " + std::string(kSweepSchema));
  std::vector<SweepCell> out;
  for (const auto& r : t.rows) {
    SweepCell c;
    c.parameter = r[0];
    c.value = r[1];
    c.mode = mode_field(r[2]);
    c.reps = parse_uint(r[3], "reps");
    c.ue_count = parse_uint(r[4], "ue_count");
    c.batch_size = parse_uint(r[5], "batch_size");
    c.tasks_per_request = parse_uint(r[6], "tasks_per_request");
    for (std::size_t k = 0; k < kSweepQuantities.size(); ++k) {
      c.mean[k] = parse_real(r[7 + 2 * k], "mean");
      c.sd[k] = parse_real(r[8 + 2 * k], "sd");
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace volchain::sim
