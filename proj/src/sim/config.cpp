#include "volchain/sim/config.hpp"

#include <cmath>

#include "volchain/chain/sha256.hpp"
#include "volchain/domain/errors.hpp"

namespace volchain::sim {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::incentive_bc1: return "incentive-bc1";
    case Mode::incentive_bc2: return "incentive-bc2";
    case Mode::non_incentive_bc: return "non-incentive-bc";
    case Mode::non_bc: return "non-bc";
  }
  return "incentive-bc1";
}

std::optional<Mode> parse_mode(std::string_view s) {
  for (const auto m : kAllModes) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

std::string_view to_string(ArrivalKind k) { return k == ArrivalKind::batch ? "batch" : "poisson"; }

std::optional<ArrivalKind> parse_arrival(std::string_view s) {
  if (s == "batch") return ArrivalKind::batch;
  if (s == "poisson") return ArrivalKind::poisson;
  return std::nullopt;
}

namespace {

template <class Ref>
FieldSpec real_field(std::string key, Ref ref) {
  return {key, FieldKind::real, [ref](const ScenarioConfig& c) { return format_real(ref(c)); },
          [ref, key](ScenarioConfig& c, std::string_view v) { ref(c) = parse_real(v, key); }};
}

template <class Ref>
FieldSpec count_field(std::string key, Ref ref) {
  return {key, FieldKind::count, [ref](const ScenarioConfig& c) { return std::to_string(ref(c)); },
          [ref, key](ScenarioConfig& c, std::string_view v) {
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(parse_uint(v, key));
          }};
}

template <class Ref>
FieldSpec bool_field(std::string key, Ref ref) {
  return {key, FieldKind::boolean, [ref](const ScenarioConfig& c) { return std::string(ref(c) ? "true" : "false"); },
          [ref, key](ScenarioConfig& c, std::string_view v) {
            if (v == "true" || v == "1") {
              ref(c) = true;
            } else if (v == "false" || v == "0") {
              ref(c) = false;
            } else {
              throw ValidationError(key + ": expected true or false, got '" + std::string(v) + "'");
            }
          }};
}

template <class Ref, class Print, class Parse>
FieldSpec enum_field(std::string key, Ref ref, Print print, Parse parse, std::string choices) {
  return {key, FieldKind::text, [ref, print](const ScenarioConfig& c) { return std::string(print(ref(c))); },
          [ref, parse, key, choices](ScenarioConfig& c, std::string_view v) {
            const auto parsed = parse(v);
            if (!parsed) throw ValidationError(key + ": expected one of " + choices + ", got '" + std::string(v) + "'");
            ref(c) = *parsed;
          }};
}

#define VC_REF(path) [](auto& c) -> auto& { return c.path; }

std::vector<FieldSpec> build_schema() {
  std::vector<FieldSpec> s;
  s.push_back(enum_field(
      "run.mode", VC_REF(run.mode), [](Mode m) { return to_string(m); }, parse_mode,
      "incentive-bc1, incentive-bc2, non-incentive-bc, non-bc"));
  s.push_back(count_field("run.seed", VC_REF(run.seed)));
  s.push_back(real_field("run.duration", VC_REF(run.duration)));
  s.push_back(bool_field("run.event_log", VC_REF(run.event_log)));

  s.push_back(real_field("area.width", VC_REF(area.width)));
  s.push_back(real_field("area.height", VC_REF(area.height)));

  s.push_back(count_field("network.ap_count", VC_REF(network.ap_count)));
  s.push_back(real_field("network.bandwidth_bps", VC_REF(network.bandwidth_bps)));
  s.push_back(real_field("network.hop_latency_s", VC_REF(network.hop_latency_s)));
  s.push_back(real_field("network.block_bits", VC_REF(network.block_bits)));
  s.push_back(real_field("network.message_bits", VC_REF(network.message_bits)));

  s.push_back(count_field("population.ue_count", VC_REF(population.ue_count)));
  s.push_back(real_field("population.miner_fraction", VC_REF(population.miner_fraction)));
  s.push_back(real_field("population.speed_min", VC_REF(population.speed_min)));
  s.push_back(real_field("population.speed_max", VC_REF(population.speed_max)));
  s.push_back(real_field("population.mobility_tick_s", VC_REF(population.mobility_tick_s)));
  s.push_back(real_field("population.registered_fraction", VC_REF(population.registered_fraction)));
  s.push_back(count_field("population.capability_count", VC_REF(population.capability_count)));
  s.push_back(count_field("population.rare_capability_count", VC_REF(population.rare_capability_count)));
  s.push_back(count_field("population.caps_per_ue", VC_REF(population.caps_per_ue)));
  s.push_back(real_field("population.rare_holder_fraction", VC_REF(population.rare_holder_fraction)));
  s.push_back(count_field("population.characteristic_count", VC_REF(population.characteristic_count)));
  s.push_back(count_field("population.prefs_per_ue", VC_REF(population.prefs_per_ue)));

  s.push_back(real_field("hardware.ue_cpu_min", VC_REF(hardware.ue_cpu_min)));
  s.push_back(real_field("hardware.ue_cpu_max", VC_REF(hardware.ue_cpu_max)));
  s.push_back(real_field("hardware.ue_epc_min", VC_REF(hardware.ue_epc_min)));
  s.push_back(real_field("hardware.ue_epc_max", VC_REF(hardware.ue_epc_max)));
  s.push_back(real_field("hardware.ue_tx_power", VC_REF(hardware.ue_tx_power)));
  s.push_back(real_field("hardware.ue_idle_power", VC_REF(hardware.ue_idle_power)));
  s.push_back(real_field("hardware.ue_storage", VC_REF(hardware.ue_storage)));
  s.push_back(real_field("hardware.fog_cpu_factor", VC_REF(hardware.fog_cpu_factor)));
  s.push_back(real_field("hardware.fog_epc", VC_REF(hardware.fog_epc)));
  s.push_back(real_field("hardware.fog_tx_power", VC_REF(hardware.fog_tx_power)));
  s.push_back(real_field("hardware.fog_idle_power", VC_REF(hardware.fog_idle_power)));
  s.push_back(real_field("hardware.fog_emulation_factor", VC_REF(hardware.fog_emulation_factor)));
  s.push_back(real_field("hardware.plan_base_s", VC_REF(hardware.plan_base_s)));
  s.push_back(real_field("hardware.plan_per_candidate_s", VC_REF(hardware.plan_per_candidate_s)));

  s.push_back(enum_field(
      "requests.arrival", VC_REF(requests.arrival), [](ArrivalKind k) { return to_string(k); }, parse_arrival,
      "batch, poisson"));
  s.push_back(count_field("requests.batch_size", VC_REF(requests.batch_size)));
  s.push_back(real_field("requests.poisson_rate", VC_REF(requests.poisson_rate)));
  s.push_back(count_field("requests.poisson_count", VC_REF(requests.poisson_count)));
  s.push_back(count_field("requests.tasks_min", VC_REF(requests.tasks_min)));
  s.push_back(count_field("requests.tasks_max", VC_REF(requests.tasks_max)));
  s.push_back(count_field("requests.chars_per_task", VC_REF(requests.chars_per_task)));
  s.push_back(real_field("requests.size_min", VC_REF(requests.size_min)));
  s.push_back(real_field("requests.size_max", VC_REF(requests.size_max)));
  s.push_back(real_field("requests.intensity_min", VC_REF(requests.intensity_min)));
  s.push_back(real_field("requests.intensity_max", VC_REF(requests.intensity_max)));
  s.push_back(real_field("requests.deadline_factor", VC_REF(requests.deadline_factor)));
  s.push_back(real_field("requests.planning_allowance_s", VC_REF(requests.planning_allowance_s)));
  s.push_back(real_field("requests.qos_floor_min", VC_REF(requests.qos_floor_min)));
  s.push_back(real_field("requests.qos_floor_max", VC_REF(requests.qos_floor_max)));
  s.push_back(real_field("requests.sensitive_fraction", VC_REF(requests.sensitive_fraction)));
  s.push_back(real_field("requests.rare_fraction", VC_REF(requests.rare_fraction)));
  s.push_back(real_field("requests.dependency_prob", VC_REF(requests.dependency_prob)));

  s.push_back(real_field("noise.time_sigma", VC_REF(noise.time_sigma)));
  s.push_back(real_field("noise.energy_sigma", VC_REF(noise.energy_sigma)));
  s.push_back(real_field("noise.quality_sigma", VC_REF(noise.quality_sigma)));

  s.push_back(real_field("quality.base", VC_REF(quality.base)));
  s.push_back(real_field("quality.span", VC_REF(quality.span)));

  s.push_back(real_field("reward.tau_q", VC_REF(reward.tau_q)));
  s.push_back(real_field("reward.tau_gamma", VC_REF(reward.tau_gamma)));
  s.push_back(real_field("reward.sigma_q", VC_REF(reward.sigma_q)));
  s.push_back(real_field("reward.sigma_gamma", VC_REF(reward.sigma_gamma)));
  s.push_back(real_field("reward.phi", VC_REF(reward.phi)));
  s.push_back(real_field("reward.rho", VC_REF(reward.rho)));
  s.push_back(real_field("reward.w_match", VC_REF(reward.w_match)));
  s.push_back(real_field("reward.w_nonmatch", VC_REF(reward.w_nonmatch)));
  s.push_back(enum_field(
      "reward.nonmatch_mode", VC_REF(reward.nonmatch_mode), [](NonmatchMode m) { return to_string(m); },
      parse_nonmatch_mode, "union, symdiff"));

  s.push_back(real_field("selection.preference_threshold", VC_REF(selection.preference_threshold)));
  s.push_back(real_field("selection.c1_band", VC_REF(selection.c1_band)));
  s.push_back(count_field("selection.alternatives", VC_REF(selection.alternatives)));

  s.push_back(count_field("participation.gain_window", VC_REF(participation.gain_window)));
  s.push_back(real_field("participation.gain_floor", VC_REF(participation.gain_floor)));
  s.push_back(real_field("participation.loss_tolerance", VC_REF(participation.loss_tolerance)));
  s.push_back(real_field("participation.preference_threshold", VC_REF(participation.preference_threshold)));
  s.push_back(real_field("participation.join_probability", VC_REF(participation.join_probability)));
  s.push_back(count_field("participation.max_reassign", VC_REF(participation.max_reassign)));

  s.push_back(count_field("behavior.rank_window", VC_REF(behavior.rank_window)));
  s.push_back(real_field("behavior.prior", VC_REF(behavior.prior)));
  s.push_back(real_field("behavior.fog_weight", VC_REF(behavior.fog_weight)));
  s.push_back(count_field("behavior.warmup_ratings", VC_REF(behavior.warmup_ratings)));
  s.push_back(real_field("behavior.warmup_noise", VC_REF(behavior.warmup_noise)));
  s.push_back(count_field("behavior.max_declines", VC_REF(behavior.max_declines)));
  s.push_back(count_field("behavior.invitation_window", VC_REF(behavior.invitation_window)));
  s.push_back(count_field("behavior.greedy_min_sample", VC_REF(behavior.greedy_min_sample)));
  s.push_back(real_field("behavior.greedy_quantile", VC_REF(behavior.greedy_quantile)));
  s.push_back(real_field("behavior.trust_initial", VC_REF(behavior.trust_initial)));
  s.push_back(real_field("behavior.trust_kappa", VC_REF(behavior.trust_kappa)));
  s.push_back(real_field("behavior.trust_target", VC_REF(behavior.trust_target)));
  s.push_back(real_field("behavior.trust_min", VC_REF(behavior.trust_min)));
  s.push_back(real_field("behavior.trust_max", VC_REF(behavior.trust_max)));
  s.push_back(real_field("behavior.miner_hysteresis", VC_REF(behavior.miner_hysteresis)));
  s.push_back(real_field("behavior.promotion_interval_s", VC_REF(behavior.promotion_interval_s)));

  for (std::size_t k = 0; k < kCategoryCount; ++k) {
    const std::string base = "dispositions." + std::string(to_string(static_cast<CoopCategory>(k))) + ".";
    s.push_back(real_field(base + "share", [k](auto& c) -> auto& { return c.dispositions.share[k]; }));
    s.push_back(real_field(base + "quality", [k](auto& c) -> auto& { return c.dispositions.quality[k]; }));
    s.push_back(real_field(base + "cpu_share", [k](auto& c) -> auto& { return c.dispositions.cpu_share[k]; }));
    s.push_back(real_field(base + "drop", [k](auto& c) -> auto& { return c.dispositions.drop[k]; }));
    s.push_back(real_field(base + "warmup_score", [k](auto& c) -> auto& { return c.dispositions.warmup_score[k]; }));
  }

  s.push_back(real_field("formation.epsilon", VC_REF(formation.epsilon)));
  s.push_back(real_field("formation.chaining_floor", VC_REF(formation.chaining_floor)));
  s.push_back(real_field("formation.weight_block", VC_REF(formation.weight_block)));
  s.push_back(real_field("formation.weight_next", VC_REF(formation.weight_next)));
  s.push_back(real_field("formation.weight_request", VC_REF(formation.weight_request)));
  s.push_back(real_field("formation.miner_range_m", VC_REF(formation.miner_range_m)));
  s.push_back(count_field("formation.miner_top_k", VC_REF(formation.miner_top_k)));
  s.push_back(real_field("formation.miner_search_s", VC_REF(formation.miner_search_s)));
  s.push_back(real_field("formation.stringent_qos_floor", VC_REF(formation.stringent_qos_floor)));
  s.push_back(real_field("formation.relaxed_deadline_slack", VC_REF(formation.relaxed_deadline_slack)));
  s.push_back(real_field("formation.escalation_gain", VC_REF(formation.escalation_gain)));
  return s;
}

#undef VC_REF

void require(bool ok, std::string_view key, std::string_view what) {
  if (!ok) throw ValidationError(std::string(key) + ": " + std::string(what));
}

void unit(double v, std::string_view key) { require(v >= 0.0 && v <= 1.0, key, "must lie in [0,1]"); }
void positive(double v, std::string_view key) { require(std::isfinite(v) && v > 0.0, key, "must be positive"); }
void nonneg(double v, std::string_view key) { require(std::isfinite(v) && v >= 0.0, key, "must be nonnegative"); }

}  // namespace

const std::vector<FieldSpec>& config_schema() {
  static const std::vector<FieldSpec> schema = build_schema();
  return schema;
}

const FieldSpec* find_field(std::string_view key) {
  for (const auto& f : config_schema()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

void set_field(ScenarioConfig& cfg, std::string_view key, std::string_view value) {
  const auto* f = find_field(key);
  if (f == nullptr) throw ValidationError("unknown configuration key '" + std::string(key) + "'");
  f->set(cfg, value);
}

void validate(const ScenarioConfig& c) {
  positive(c.run.duration, "run.duration");
  positive(c.area.width, "area.width");
  positive(c.area.height, "area.height");
  require(c.network.ap_count >= 1, "network.ap_count", "must be at least 1");
  positive(c.network.bandwidth_bps, "network.bandwidth_bps");
  nonneg(c.network.hop_latency_s, "network.hop_latency_s");
  positive(c.network.block_bits, "network.block_bits");
  nonneg(c.network.message_bits, "network.message_bits");

  const auto& p = c.population;
  require(p.ue_count >= 1, "population.ue_count", "must be at least 1");
  unit(p.miner_fraction, "population.miner_fraction");
  positive(p.speed_min, "population.speed_min");
  require(p.speed_max >= p.speed_min, "population.speed_max", "must be >= population.speed_min");
  positive(p.mobility_tick_s, "population.mobility_tick_s");
  unit(p.registered_fraction, "population.registered_fraction");
  require(p.rare_capability_count < p.capability_count, "population.rare_capability_count",
          "must leave at least one common capability");
  require(p.caps_per_ue >= 1 && p.caps_per_ue <= p.capability_count - p.rare_capability_count,
          "population.caps_per_ue", "must be between 1 and the number of common capabilities");
  unit(p.rare_holder_fraction, "population.rare_holder_fraction");
  require(p.characteristic_count >= 1, "population.characteristic_count", "must be at least 1");
  require(p.prefs_per_ue <= p.characteristic_count, "population.prefs_per_ue",
          "must not exceed population.characteristic_count");

  const auto& h = c.hardware;
  positive(h.ue_cpu_min, "hardware.ue_cpu_min");
  require(h.ue_cpu_max >= h.ue_cpu_min, "hardware.ue_cpu_max", "must be >= hardware.ue_cpu_min");
  positive(h.ue_epc_min, "hardware.ue_epc_min");
  require(h.ue_epc_max >= h.ue_epc_min, "hardware.ue_epc_max", "must be >= hardware.ue_epc_min");
  nonneg(h.ue_tx_power, "hardware.ue_tx_power");
  nonneg(h.ue_idle_power, "hardware.ue_idle_power");
  positive(h.ue_storage, "hardware.ue_storage");
  positive(h.fog_cpu_factor, "hardware.fog_cpu_factor");
  positive(h.fog_epc, "hardware.fog_epc");
  nonneg(h.fog_tx_power, "hardware.fog_tx_power");
  nonneg(h.fog_idle_power, "hardware.fog_idle_power");
  require(h.fog_emulation_factor >= 1.0, "hardware.fog_emulation_factor", "must be >= 1");
  nonneg(h.plan_base_s, "hardware.plan_base_s");
  nonneg(h.plan_per_candidate_s, "hardware.plan_per_candidate_s");

  const auto& r = c.requests;
  positive(r.poisson_rate, "requests.poisson_rate");
  require(r.tasks_min >= 1, "requests.tasks_min", "must be at least 1");
  require(r.tasks_max >= r.tasks_min, "requests.tasks_max", "must be >= requests.tasks_min");
  require(r.chars_per_task <= p.characteristic_count, "requests.chars_per_task",
          "must not exceed population.characteristic_count");
  nonneg(r.size_min, "requests.size_min");
  require(r.size_max >= r.size_min, "requests.size_max", "must be >= requests.size_min");
  nonneg(r.intensity_min, "requests.intensity_min");
  require(r.intensity_max >= r.intensity_min, "requests.intensity_max", "must be >= requests.intensity_min");
  positive(r.deadline_factor, "requests.deadline_factor");
  nonneg(r.planning_allowance_s, "requests.planning_allowance_s");
  unit(r.qos_floor_min, "requests.qos_floor_min");
  unit(r.qos_floor_max, "requests.qos_floor_max");
  require(r.qos_floor_max >= r.qos_floor_min, "requests.qos_floor_max", "must be >= requests.qos_floor_min");
  unit(r.sensitive_fraction, "requests.sensitive_fraction");
  unit(r.rare_fraction, "requests.rare_fraction");
  unit(r.dependency_prob, "requests.dependency_prob");

  nonneg(c.noise.time_sigma, "noise.time_sigma");
  nonneg(c.noise.energy_sigma, "noise.energy_sigma");
  nonneg(c.noise.quality_sigma, "noise.quality_sigma");
  unit(c.quality.base, "quality.base");
  unit(c.quality.base + c.quality.span, "quality.span");
  nonneg(c.quality.span, "quality.span");

  try {
    c.reward.validate();
  } catch (const ParameterError& e) {
    throw ValidationError(std::string("reward: ") + e.what());
  }

  unit(c.selection.preference_threshold, "selection.preference_threshold");
  unit(c.selection.c1_band, "selection.c1_band");
  require(c.selection.alternatives >= 1, "selection.alternatives", "must be at least 1");

  nonneg(c.participation.loss_tolerance, "participation.loss_tolerance");
  unit(c.participation.preference_threshold, "participation.preference_threshold");
  unit(c.participation.join_probability, "participation.join_probability");

  const auto& b = c.behavior;
  require(b.rank_window >= 1, "behavior.rank_window", "must be at least 1");
  unit(b.prior, "behavior.prior");
  nonneg(b.fog_weight, "behavior.fog_weight");
  nonneg(b.warmup_noise, "behavior.warmup_noise");
  require(b.invitation_window >= 1, "behavior.invitation_window", "must be at least 1");
  unit(b.greedy_quantile, "behavior.greedy_quantile");
  unit(b.trust_initial, "behavior.trust_initial");
  nonneg(b.trust_kappa, "behavior.trust_kappa");
  positive(b.trust_target, "behavior.trust_target");
  unit(b.trust_min, "behavior.trust_min");
  unit(b.trust_max, "behavior.trust_max");
  require(b.trust_min <= b.trust_max, "behavior.trust_max", "must be >= behavior.trust_min");
  nonneg(b.miner_hysteresis, "behavior.miner_hysteresis");
  positive(b.promotion_interval_s, "behavior.promotion_interval_s");

  double share_sum = 0.0;
  for (std::size_t k = 0; k < kCategoryCount; ++k) {
    const std::string base = "dispositions." + std::string(to_string(static_cast<CoopCategory>(k))) + ".";
    nonneg(c.dispositions.share[k], base + "share");
    share_sum += c.dispositions.share[k];
    unit(c.dispositions.quality[k], base + "quality");
    require(c.dispositions.cpu_share[k] > 0.0 && c.dispositions.cpu_share[k] <= 1.0, base + "cpu_share",
            "must lie in (0,1]");
    unit(c.dispositions.drop[k], base + "drop");
    unit(c.dispositions.warmup_score[k], base + "warmup_score");
  }
  require(std::abs(share_sum - 1.0) < 1e-9, "dispositions", "shares must sum to 1");

  const auto& f = c.formation;
  unit(f.epsilon, "formation.epsilon");
  unit(f.chaining_floor, "formation.chaining_floor");
  nonneg(f.weight_block, "formation.weight_block");
  nonneg(f.weight_next, "formation.weight_next");
  nonneg(f.weight_request, "formation.weight_request");
  require(f.weight_block + f.weight_next + f.weight_request > 0.0, "formation.weight_block",
          "similarity weights must have a positive sum");
  nonneg(f.miner_range_m, "formation.miner_range_m");
  require(f.miner_top_k >= 1, "formation.miner_top_k", "must be at least 1");
  nonneg(f.miner_search_s, "formation.miner_search_s");
  unit(f.stringent_qos_floor, "formation.stringent_qos_floor");
  nonneg(f.relaxed_deadline_slack, "formation.relaxed_deadline_slack");
  require(std::isfinite(f.escalation_gain), "formation.escalation_gain", "must be finite");
}

TextRecord to_record(const ScenarioConfig& cfg) {
  TextRecord r;
  for (const auto& f : config_schema()) r.set(f.key, f.get(cfg));
  return r;
}

ScenarioConfig config_from_record(const TextRecord& r) {
  ScenarioConfig cfg;
  for (const auto& [key, value] : r.fields()) set_field(cfg, key, value);
  return cfg;
}

std::string config_hash(const ScenarioConfig& cfg) { return chain::to_hex(chain::sha256(to_record(cfg).to_text())); }

}  // namespace volchain::sim
