#include "volchain/similarity/similarity.hpp"

#include "volchain/domain/errors.hpp"

namespace volchain::similarity {

double comp_char(const FeatureSet& a, const FeatureSet& b, const RewardParams& params) {
  if (!(params.w_match + params.w_nonmatch > 0.0)) {
    throw ParameterError("w_match + w_nonmatch must be > 0");
  }
  const auto matched = static_cast<double>(a.intersection_size(b));
  if (matched == 0.0) return 0.0;
  auto nonmatched = static_cast<double>(a.union_size(b));
  if (params.nonmatch_mode == NonmatchMode::symdiff_count) nonmatched -= matched;
  const double denominator = params.w_match * matched + params.w_nonmatch * nonmatched;
  // Identical sets in symdiff mode with w_match = 0: nothing distinguishes them.
  if (denominator == 0.0) return 1.0;
  return matched / denominator;
}

bool task_preference_match(const Participant& p, const Task& t, const RewardParams& params, double threshold) {
  return comp_char(p.preferences, t.characteristics, params) >= threshold;
}

bool capability_match(const Participant& p, const Task& t) {
  return t.required_capability.is_subset_of(p.capabilities);
}

}  // namespace volchain::similarity
