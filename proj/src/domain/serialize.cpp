#include "volchain/domain/serialize.hpp"

#include "volchain/domain/errors.hpp"

namespace volchain {

namespace {

std::string idx(std::string_view prefix, std::size_t i) { return std::string(prefix) + "." + std::to_string(i); }

template <class Parse>
auto parse_enum(const TextRecord& r, std::string_view key, Parse parse) {
  const auto& text = r.get(key);
  auto v = parse(text);
  if (!v) throw ValidationError(std::string(key) + ": unknown value '" + text + "'");
  return *v;
}

void require_unit_interval(double v, std::string_view what) {
  if (v < 0.0 || v > 1.0) throw ValidationError(std::string(what) + " must lie in [0,1]");
}

}  // namespace

TextRecord to_record(const QoSSpec& v) {
  TextRecord r;
  r.set_real("ceiling", v.ceiling);
  r.set_real("floor", v.floor);
  return r;
}

QoSSpec qos_from_record(const TextRecord& r) {
  QoSSpec q{r.get_real("floor"), r.get_real("ceiling")};
  require_unit_interval(q.floor, "qos floor");
  require_unit_interval(q.ceiling, "qos ceiling");
  if (q.floor > q.ceiling) throw ValidationError("qos floor exceeds ceiling");
  return q;
}

TextRecord to_record(const Task& v) {
  TextRecord r;
  r.set("id", v.id.str());
  r.set_real("size_alpha", v.size_alpha);
  r.set_uint("deps.count", v.deps_beta.size());
  for (std::size_t i = 0; i < v.deps_beta.size(); ++i) r.set(idx("deps", i), v.deps_beta[i].str());
  r.set_real("deadline_gamma", v.deadline_gamma);
  r.set_real("intensity_delta", v.intensity_delta);
  r.set_real("energy_zeta", v.energy_zeta);
  r.set_features("characteristics", v.characteristics);
  r.set_features("required_capability", v.required_capability);
  r.set_bool("sensitive", v.sensitive);
  return r;
}

Task task_from_record(const TextRecord& r) {
  Task t;
  t.id = TaskId(r.get("id"));
  t.size_alpha = r.get_real("size_alpha");
  const auto n = r.get_uint("deps.count");
  for (std::uint64_t i = 0; i < n; ++i) t.deps_beta.emplace_back(r.get(idx("deps", i)));
  t.deadline_gamma = r.get_real("deadline_gamma");
  t.intensity_delta = r.get_real("intensity_delta");
  t.energy_zeta = r.get_real("energy_zeta");
  t.characteristics = r.get_features("characteristics");
  t.required_capability = r.get_features("required_capability");
  t.sensitive = r.get_bool("sensitive");
  return t;
}

TextRecord to_record(const ServiceRequest& v) {
  TextRecord r;
  r.set("id", v.id.str());
  r.set("requester", v.requester.str());
  r.set_features("description_d", v.description_d);
  r.merge_prefixed("qos_q", to_record(v.qos_q));
  r.set_real("other_o.cost_cap", v.other_o.cost_cap);
  r.set("other_o.priority", std::string(to_string(v.other_o.priority)));
  r.set_uint("tasks.count", v.tasks.size());
  for (std::size_t i = 0; i < v.tasks.size(); ++i) r.merge_prefixed(idx("tasks", i), to_record(v.tasks[i]));
  r.set_real("arrival_time", v.arrival_time);
  return r;
}

ServiceRequest request_from_record(const TextRecord& r) {
  ServiceRequest req;
  req.id = RequestId(r.get("id"));
  req.requester = ParticipantId(r.get("requester"));
  req.description_d = r.get_features("description_d");
  req.qos_q = qos_from_record(r.sub("qos_q"));
  req.other_o.cost_cap = r.get_real("other_o.cost_cap");
  req.other_o.priority = parse_enum(r, "other_o.priority", parse_priority);
  const auto n = r.get_uint("tasks.count");
  for (std::uint64_t i = 0; i < n; ++i) req.tasks.push_back(task_from_record(r.sub(idx("tasks", i))));
  req.arrival_time = r.get_real("arrival_time");
  return req;
}

TextRecord to_record(const ActualOutcome& v) {
  TextRecord r;
  r.set_real("achieved_q", v.achieved_q);
  r.set_real("completion_time", v.completion_time);
  r.set_real("workload_delta", v.workload_delta);
  r.set_real("energy_used", v.energy_used);
  r.set_bool("completed", v.completed);
  return r;
}

ActualOutcome outcome_from_record(const TextRecord& r) {
  ActualOutcome o;
  o.achieved_q = r.get_real("achieved_q");
  o.completion_time = r.get_real("completion_time");
  o.workload_delta = r.get_real("workload_delta");
  o.energy_used = r.get_real("energy_used");
  o.completed = r.get_bool("completed");
  require_unit_interval(o.achieved_q, "achieved_q");
  if (!o.completed && o.achieved_q != 0.0) throw ValidationError("uncompleted outcome with nonzero quality");
  return o;
}

TextRecord to_record(const HardwareProfile& v) {
  TextRecord r;
  r.set_real("cpu_rate", v.cpu_rate);
  r.set_real("energy_per_cycle", v.energy_per_cycle);
  r.set_real("storage", v.storage);
  r.set_real("tx_power", v.tx_power);
  r.set_real("idle_power", v.idle_power);
  return r;
}

HardwareProfile hardware_from_record(const TextRecord& r) {
  HardwareProfile h;
  h.cpu_rate = r.get_real("cpu_rate");
  h.energy_per_cycle = r.get_real("energy_per_cycle");
  h.storage = r.get_real("storage");
  h.tx_power = r.get_real("tx_power");
  h.idle_power = r.get_real("idle_power");
  if (!(h.cpu_rate > 0 && h.energy_per_cycle > 0 && h.storage > 0 && h.tx_power > 0 && h.idle_power > 0)) {
    throw ValidationError("hardware profile fields must be strictly positive");
  }
  return h;
}

TextRecord to_record(const Participant& v) {
  TextRecord r;
  r.set("id", v.id.str());
  r.set_features("capabilities", v.capabilities);
  r.set_features("preferences", v.preferences);
  r.merge_prefixed("hardware", to_record(v.hardware));
  r.set_real("position.x", v.position.x);
  r.set_real("position.y", v.position.y);
  r.set_real("coop_score_c", v.coop_score_c);
  r.set("category", std::string(to_string(v.category)));
  r.set("disposition", std::string(to_string(v.disposition)));
  r.set("status", std::string(to_string(v.status)));
  r.set_bool("is_miner", v.is_miner);
  r.set_bool("registered", v.registered);
  r.set_int("rewards_accumulated_micros", v.rewards_accumulated.micros());
  r.set_uint("gain_history.count", v.gain_history.size());
  for (std::size_t i = 0; i < v.gain_history.size(); ++i) r.set_real(idx("gain_history", i), v.gain_history[i]);
  r.set_uint("decline_count", v.decline_count);
  r.set_uint("invitations.count", v.invitations.size());
  for (std::size_t i = 0; i < v.invitations.size(); ++i) {
    r.set_real(idx("invitations", i) + ".offered_reward", v.invitations[i].offered_reward);
    r.set_bool(idx("invitations", i) + ".accepted", v.invitations[i].accepted);
  }
  return r;
}

Participant participant_from_record(const TextRecord& r) {
  Participant p;
  p.id = ParticipantId(r.get("id"));
  p.capabilities = r.get_features("capabilities");
  p.preferences = r.get_features("preferences");
  p.hardware = hardware_from_record(r.sub("hardware"));
  p.position = {r.get_real("position.x"), r.get_real("position.y")};
  p.coop_score_c = r.get_real("coop_score_c");
  require_unit_interval(p.coop_score_c, "coop_score_c");
  p.category = parse_enum(r, "category", parse_category);
  p.disposition = parse_enum(r, "disposition", parse_category);
  p.status = parse_enum(r, "status", parse_status);
  p.is_miner = r.get_bool("is_miner");
  p.registered = r.get_bool("registered");
  p.rewards_accumulated = Credits::from_micros(r.get_int("rewards_accumulated_micros"));
  if (p.rewards_accumulated.micros() < 0) throw ValidationError("rewards_accumulated must be nonnegative");
  const auto gains = r.get_uint("gain_history.count");
  for (std::uint64_t i = 0; i < gains; ++i) p.gain_history.push_back(r.get_real(idx("gain_history", i)));
  p.decline_count = r.get_uint("decline_count");
  const auto invs = r.get_uint("invitations.count");
  for (std::uint64_t i = 0; i < invs; ++i) {
    p.invitations.push_back({r.get_real(idx("invitations", i) + ".offered_reward"),
                             r.get_bool(idx("invitations", i) + ".accepted")});
  }
  return p;
}

TextRecord to_record(const RewardParams& v) {
  TextRecord r;
  r.set_real("tau_q", v.tau_q);
  r.set_real("tau_gamma", v.tau_gamma);
  r.set_real("sigma_q", v.sigma_q);
  r.set_real("sigma_gamma", v.sigma_gamma);
  r.set_real("phi", v.phi);
  r.set_real("rho", v.rho);
  r.set_real("w_match", v.w_match);
  r.set_real("w_nonmatch", v.w_nonmatch);
  r.set("nonmatch_mode", std::string(to_string(v.nonmatch_mode)));
  return r;
}

RewardParams reward_params_from_record(const TextRecord& r) {
  RewardParams p;
  p.tau_q = r.get_real("tau_q");
  p.tau_gamma = r.get_real("tau_gamma");
  p.sigma_q = r.get_real("sigma_q");
  p.sigma_gamma = r.get_real("sigma_gamma");
  p.phi = r.get_real("phi");
  p.rho = r.get_real("rho");
  p.w_match = r.get_real("w_match");
  p.w_nonmatch = r.get_real("w_nonmatch");
  p.nonmatch_mode = parse_enum(r, "nonmatch_mode", parse_nonmatch_mode);
  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw ValidationError(e.what());
  }
  return p;
}

}  // namespace volchain
