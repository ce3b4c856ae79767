#pragma once

#include <span>

#include "volchain/domain/credits.hpp"
#include "volchain/domain/types.hpp"

namespace volchain::incentive {

/// One task as a participant experienced it: the deadline it was given,
/// the quality band of the owning request, and what actually happened.
struct TaskExecution {
  double deadline = 0.0;  // gamma
  QoSSpec qos;
  ActualOutcome outcome;  // completion_time of an uncompleted task is the abandonment time
};

struct GainBreakdown {
  double reward_r = 0.0;
  double workload_w = 0.0;
  double penalty_p = 0.0;
  double gain_g = 0.0;

  friend bool operator==(const GainBreakdown&, const GainBreakdown&) = default;
};

/// Quality reward tau_q * q for in-band quality plus tau_gamma per time unit
/// finished ahead of the deadline. Uncompleted tasks earn nothing.
double compute_reward(std::span<const TaskExecution> tasks, const RewardParams& params);

/// Sum of normalized cycle usage and normalized energy usage.
double compute_workload(std::span<const TaskExecution> tasks);

/// sigma_q * q for out-of-band quality plus sigma_gamma per time unit late.
/// An uncompleted task is charged sigma_q * floor and its lateness at the
/// abandonment time.
double compute_penalty(std::span<const TaskExecution> tasks, const RewardParams& params);

/// reward - workload - penalty, with the components reported.
GainBreakdown compute_gain(std::span<const TaskExecution> tasks, const RewardParams& params);
GainBreakdown compute_gain(const TaskExecution& task, const RewardParams& params);

struct RewardShares {
  Credits miner;
  Credits participant;
};

/// Splits a nonnegative task reward: the miner gets phi * reward rounded to
/// the nearest micro-unit (half away from zero), the participant the rest.
/// The two shares always add back to `task_reward` exactly.
RewardShares miner_reward(Credits task_reward, const RewardParams& params);

}  // namespace volchain::incentive
