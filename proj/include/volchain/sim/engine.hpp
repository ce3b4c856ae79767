#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "volchain/behavior/ranking.hpp"
#include "volchain/chain/block.hpp"
#include "volchain/sim/config.hpp"

namespace volchain::sim {

/// Behaviour switches implied by a mode.
struct ModeSwitches {
  bool incentives = true;     // gain-driven participation, rewards, ranking, bans
  bool miners = true;         // miner search for unregistered capabilities
  bool learning = true;       // value matrix drives block choice
  bool fog_executes = false;  // the serving fog runs every task itself
  bool random_join = false;   // devices join with a fixed probability
};

ModeSwitches apply_mode(Mode mode);

struct MetricsFrame {
  Mode mode = Mode::incentive_bc1;
  std::uint64_t seed = 0;
  std::size_t ue_count = 0;
  std::size_t batch_size = 0;
  std::size_t tasks_per_request = 0;
  double cpu_usage = 0.0;  // mean busy share of the service window, over devices that ran a task
  double energy_j = 0.0;
  double hit_ratio = 0.0;
  double delay_s = 0.0;  // mean over complete requests
  double rewards_ue = 0.0;
  double rewards_miner = 0.0;

  std::size_t request_count = 0;
  std::size_t completed = 0;
  bool vacuous = false;  // no requests; hit_ratio reported as 1

  friend bool operator==(const MetricsFrame&, const MetricsFrame&) = default;
};

struct RequestRow {
  std::string id;
  double arrival = 0.0;
  std::string kind;  // simple, complex, fog
  bool complete = false;
  std::string failure;
  double delay_s = 0.0;
  std::size_t tasks = 0;
  std::size_t mined_blocks = 0;
  double reward = 0.0;
};

/// One line of the audit log. Energy lines carry the device, the energy
/// kind (compute, radio, idle) and joules; event lines carry the event
/// kind and the sequence number and time of the event that scheduled it.
/// Sequence numbers start at 1; cause_seq 0 marks an event scheduled before
/// the first event ran.
struct LogRecord {
  double time = 0.0;
  std::uint64_t seq = 0;
  std::string kind;
  std::uint64_t cause_seq = 0;
  double cause_time = 0.0;
  std::string device;
  std::string energy_kind;
  double joules = 0.0;

  std::string to_line() const;
};

struct DeviceUsage {
  std::string id;
  bool fog = false;
  std::size_t tasks_run = 0;
  double busy_s = 0.0;
  double engaged_s = 0.0;
  double compute_j = 0.0;
  double radio_j = 0.0;
  double idle_j = 0.0;
};

struct RunOutput {
  MetricsFrame metrics;
  std::vector<RequestRow> requests;
  std::vector<chain::Chain> chains;
  std::vector<DeviceUsage> devices;
  std::vector<LogRecord> log;  // filled when run.event_log is set
  behavior::RankLedger ranks;
  double end_time = 0.0;
};

/// Runs one scenario to completion. Throws ValidationError on an invalid
/// configuration before any event is processed. Identical configurations
/// give identical outputs.
RunOutput run_scenario(const ScenarioConfig& cfg);

}  // namespace volchain::sim
