#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "volchain/domain/text_record.hpp"
#include "volchain/domain/types.hpp"

namespace volchain::sim {

enum class Mode { incentive_bc1, incentive_bc2, non_incentive_bc, non_bc };
inline constexpr std::array<Mode, 4> kAllModes{Mode::incentive_bc1, Mode::incentive_bc2, Mode::non_incentive_bc,
                                               Mode::non_bc};
std::string_view to_string(Mode m);
std::optional<Mode> parse_mode(std::string_view s);

enum class ArrivalKind { batch, poisson };
std::string_view to_string(ArrivalKind k);
std::optional<ArrivalKind> parse_arrival(std::string_view s);

/// Latent behaviour of devices with a given disposition. Indexed by
/// CoopCategory (HighlyNonCooperative first).
struct DispositionModel {
  std::array<double, kCategoryCount> share{0.05, 0.10, 0.15, 0.20, 0.30, 0.20};
  std::array<double, kCategoryCount> quality{0.5, 0.7, 0.9, 0.95, 1.0, 1.0};
  std::array<double, kCategoryCount> cpu_share{0.15, 0.3, 0.6, 0.9, 1.0, 1.0};
  std::array<double, kCategoryCount> drop{0.5, 0.3, 0.05, 0.02, 0.0, 0.0};
  std::array<double, kCategoryCount> warmup_score{0.05, 0.25, 0.5, 0.65, 0.8, 0.95};
};

struct ScenarioConfig {
  struct Run {
    Mode mode = Mode::incentive_bc1;
    std::uint64_t seed = 1;
    double duration = 3600.0;  // s; requests still open then count as failed
    bool event_log = false;
  } run;

  struct Area {
    double width = 1000.0;
    double height = 1000.0;
  } area;

  struct Network {
    std::size_t ap_count = 10;
    double bandwidth_bps = 54e6;
    double hop_latency_s = 0.002;
    double block_bits = 1e6;  // one data block
    double message_bits = 8000.0;
  } network;

  struct Population {
    std::size_t ue_count = 500;
    double miner_fraction = 0.10;
    double speed_min = 1.0;
    double speed_max = 2.0;
    double mobility_tick_s = 1.0;
    double registered_fraction = 0.6;
    std::size_t capability_count = 12;  // includes the rare ones
    std::size_t rare_capability_count = 3;
    std::size_t caps_per_ue = 3;
    double rare_holder_fraction = 0.15;  // of unregistered devices
    std::size_t characteristic_count = 8;
    std::size_t prefs_per_ue = 3;
  } population;

  struct Hardware {
    double ue_cpu_min = 0.5e9;
    double ue_cpu_max = 2.0e9;
    double ue_epc_min = 0.6e-9;
    double ue_epc_max = 1.4e-9;
    double ue_tx_power = 0.02;
    double ue_idle_power = 0.001;
    double ue_storage = 1000.0;
    double fog_cpu_factor = 10.0;  // relative to the mean UE cpu rate
    double fog_epc = 5e-10;
    double fog_tx_power = 0.1;
    double fog_idle_power = 0.01;
    double fog_emulation_factor = 8.0;  // cycle overhead of running device tasks on the fog
    double plan_base_s = 0.02;
    double plan_per_candidate_s = 0.00005;
  } hardware;

  struct Requests {
    ArrivalKind arrival = ArrivalKind::batch;
    std::size_t batch_size = 30;
    double poisson_rate = 0.2;  // requests / s
    std::size_t poisson_count = 30;
    std::size_t tasks_min = 5;
    std::size_t tasks_max = 10;
    std::size_t chars_per_task = 2;
    double size_min = 1.0;
    double size_max = 5.0;
    double intensity_min = 1e8;
    double intensity_max = 4e8;
    double deadline_factor = 3.0;
    double planning_allowance_s = 0.5;
    double qos_floor_min = 0.4;
    double qos_floor_max = 0.7;
    double sensitive_fraction = 0.1;
    double rare_fraction = 0.3;
    double dependency_prob = 0.7;
  } requests;

  struct Noise {
    double time_sigma = 0.1;
    double energy_sigma = 0.1;
    double quality_sigma = 0.05;
  } noise;

  struct Quality {
    double base = 0.6;
    double span = 0.4;
  } quality;

  RewardParams reward;

  struct Selection {
    double preference_threshold = 0.0;
    double c1_band = 0.05;
    std::size_t alternatives = 3;
  } selection;

  struct Participation {
    std::size_t gain_window = 5;
    double gain_floor = -0.5;
    double loss_tolerance = 0.5;  // loss a highly cooperative device still accepts
    double preference_threshold = 0.2;
    double join_probability = 0.5;  // without incentives
    std::size_t max_reassign = 2;
  } participation;

  struct Behavior {
    std::size_t rank_window = 20;
    double prior = 0.5;
    double fog_weight = 1.0;
    std::size_t warmup_ratings = 5;
    double warmup_noise = 0.05;
    std::size_t max_declines = 5;
    std::size_t invitation_window = 20;
    std::size_t greedy_min_sample = 10;
    double greedy_quantile = 0.75;
    double trust_initial = 0.7;
    double trust_kappa = 0.1;
    double trust_target = 500.0;
    double trust_min = 0.5;
    double trust_max = 0.9;
    double miner_hysteresis = 0.05;
    double promotion_interval_s = 30.0;
  } behavior;

  DispositionModel dispositions;

  struct Formation {
    double epsilon = 0.1;
    double chaining_floor = 0.0;
    double weight_block = 0.5;
    double weight_next = 0.25;
    double weight_request = 0.25;
    double miner_range_m = 250.0;
    std::size_t miner_top_k = 2;
    double miner_search_s = 0.05;
    double stringent_qos_floor = 0.9;
    double relaxed_deadline_slack = 5.0;
    double escalation_gain = 1.0;  // registry offers below this send the fog to the miners
  } formation;
};

enum class FieldKind { real, count, boolean, text };

/// One configurable key. Values travel as text so every reader (YAML, key=value
/// records, command-line overrides) shares one strict parser.
struct FieldSpec {
  std::string key;  // dotted path, e.g. "network.bandwidth_bps"
  FieldKind kind = FieldKind::real;
  std::function<std::string(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, std::string_view)> set;  // throws ValidationError
};

/// Every key of ScenarioConfig, in section order.
const std::vector<FieldSpec>& config_schema();
const FieldSpec* find_field(std::string_view key);

/// Sets one key from text. Throws ValidationError naming the key for an
/// unknown key or an unparseable value.
void set_field(ScenarioConfig& cfg, std::string_view key, std::string_view value);

/// Throws ValidationError naming the first offending key.
void validate(const ScenarioConfig& cfg);

TextRecord to_record(const ScenarioConfig& cfg);
ScenarioConfig config_from_record(const TextRecord& r);

/// Hex SHA-256 of the canonical record of every key.
std::string config_hash(const ScenarioConfig& cfg);

/// Version of the configuration layout, recorded in run manifests.
inline constexpr int kConfigSchemaVersion = 1;

}  // namespace volchain::sim
