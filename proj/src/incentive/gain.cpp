#include "volchain/incentive/gain.hpp"

#include <algorithm>
#include <cmath>

#include "volchain/domain/errors.hpp"

namespace volchain::incentive {

namespace {

double task_reward(const TaskExecution& t, const RewardParams& params) {
  const auto& o = t.outcome;
  if (!o.completed) return 0.0;
  double r = 0.0;
  if (t.qos.contains(o.achieved_q)) r += params.tau_q * o.achieved_q;
  if (o.completion_time <= t.deadline) r += params.tau_gamma * std::max(0.0, t.deadline - o.completion_time);
  return r;
}

double task_penalty(const TaskExecution& t, const RewardParams& params) {
  const auto& o = t.outcome;
  double p = 0.0;
  if (!o.completed) {
    p += params.sigma_q * t.qos.floor;
  } else if (!t.qos.contains(o.achieved_q)) {
    p += params.sigma_q * o.achieved_q;
  }
  if (o.completion_time >= t.deadline) p += params.sigma_gamma * (o.completion_time - t.deadline);
  return p;
}

double task_workload(const TaskExecution& t) { return t.outcome.workload_delta + t.outcome.energy_used; }

}  // namespace

double compute_reward(std::span<const TaskExecution> tasks, const RewardParams& params) {
  double sum = 0.0;
  for (const auto& t : tasks) sum += task_reward(t, params);
  return sum;
}

double compute_workload(std::span<const TaskExecution> tasks) {
  double sum = 0.0;
  for (const auto& t : tasks) sum += task_workload(t);
  return sum;
}

double compute_penalty(std::span<const TaskExecution> tasks, const RewardParams& params) {
  double sum = 0.0;
  for (const auto& t : tasks) sum += task_penalty(t, params);
  return sum;
}

GainBreakdown compute_gain(std::span<const TaskExecution> tasks, const RewardParams& params) {
  GainBreakdown g;
  g.reward_r = compute_reward(tasks, params);
  g.workload_w = compute_workload(tasks);
  g.penalty_p = compute_penalty(tasks, params);
  g.gain_g = g.reward_r - g.workload_w - g.penalty_p;
  return g;
}

GainBreakdown compute_gain(const TaskExecution& task, const RewardParams& params) {
  return compute_gain(std::span<const TaskExecution>(&task, 1), params);
}

RewardShares miner_reward(Credits task_reward, const RewardParams& params) {
  if (task_reward.micros() < 0) throw ParameterError("task reward must be nonnegative");
  if (!(params.phi >= 0.0 && params.phi <= 1.0)) throw ParameterError("phi must lie in [0,1]");
  const auto miner = std::llround(params.phi * static_cast<double>(task_reward.micros()));
  const auto miner_share = Credits::from_micros(std::clamp<std::int64_t>(miner, 0, task_reward.micros()));
  return {miner_share, task_reward - miner_share};
}

}  // namespace volchain::incentive
