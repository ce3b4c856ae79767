#pragma once

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "volchain/domain/types.hpp"

namespace volchain::incentive {

struct Assignment {
  std::map<TaskId, ParticipantId> chosen;
  std::vector<TaskId> unassigned;  // tasks left without a candidate
  double total_gain = 0.0;

  bool partial() const noexcept { return !unassigned.empty(); }
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

/// Anticipated gain of giving `task` to `candidate`, given the tasks already
/// placed. The estimate may depend on that partial assignment (a node that
/// already holds work is slower on the next task).
using GainEstimator =
    std::function<double(const Participant& candidate, const Task& task, const Assignment& so_far)>;

struct SelectionPolicy {
  double preference_threshold = 0.0;
  // Candidates whose C_n is within this distance of the best candidate's
  // C_n form the cooperation-qualified set.
  double c1_band = 0.05;
};

/// Active, capable and preference-matching participants for `task`, in pool
/// order.
std::vector<const Participant*> eligible_candidates(const Task& task, std::span<const Participant> pool,
                                                    const RewardParams& params, const SelectionPolicy& policy);

/// The eligible candidates whose C_n lies within `c1_band` of the best, in
/// ascending id order.
std::vector<const Participant*> cooperation_qualified(const Task& task, std::span<const Participant> pool,
                                                      const RewardParams& params, const SelectionPolicy& policy);

/// Greedy per-task selection. Tasks are visited in dependency order; each
/// takes the cooperation-qualified candidate with the highest anticipated
/// gain, ties going to the lexicographically smallest id. A participant may
/// hold several tasks of one request.
Assignment select_participants(const ServiceRequest& req, std::span<const Participant> pool,
                               const RewardParams& params, const SelectionPolicy& policy,
                               const GainEstimator& estimate);

/// Exhaustive search over every combination of cooperation-qualified
/// candidates, maximizing total gain. Exponential; meant for small
/// instances and for checking the greedy solver.
Assignment select_participants_exact(const ServiceRequest& req, std::span<const Participant> pool,
                                     const RewardParams& params, const SelectionPolicy& policy,
                                     const GainEstimator& estimate);

}  // namespace volchain::incentive
