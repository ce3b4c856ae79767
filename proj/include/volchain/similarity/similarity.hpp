#pragma once

#include "volchain/domain/feature_set.hpp"
#include "volchain/domain/types.hpp"

namespace volchain::similarity {

/// Weighted overlap score of two feature sets.
///
///   score = m / (w_match * m + w_nonmatch * n)
///
/// with m = |a ∩ b| and n = |a ∪ b| (or |a ∪ b| - |a ∩ b| in symdiff mode).
/// Both sets empty gives 0. Throws ParameterError when the weights do not
/// sum to a positive value.
double comp_char(const FeatureSet& a, const FeatureSet& b, const RewardParams& params);

/// True when the participant's preferences score at least `threshold`
/// against the task characteristics.
bool task_preference_match(const Participant& p, const Task& t, const RewardParams& params, double threshold);

/// True when the participant holds every capability the task requires.
bool capability_match(const Participant& p, const Task& t);

}  // namespace volchain::similarity
