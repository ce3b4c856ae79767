#include "volchain/chain/value_matrix.hpp"

#include <algorithm>

#include "volchain/domain/errors.hpp"

namespace volchain::chain {

ValueMatrix::ValueMatrix(double rho) : rho_(rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("learning rate must lie in [0,1]");
}

const ValueEntry* ValueMatrix::find(const std::string& slot, const ParticipantId& candidate) const {
  const auto it = entries_.find({slot, candidate});
  return it == entries_.end() ? nullptr : &it->second;
}

void ValueMatrix::update_value(const std::string& slot, const ParticipantId& candidate, double target) {
  auto& e = entries_[{slot, candidate}];
  e.value = e.value + rho_ * (target - e.value);
  ++e.updates;
}

void ValueMatrix::record_similarity(const std::string& slot, const ParticipantId& candidate, double similarity) {
  auto& e = entries_[{slot, candidate}];
  auto [best, inserted] = slot_best_.try_emplace(slot, similarity);
  if (!inserted) best->second = std::max(best->second, similarity);
  ++e.trials;
  e.sim_sum += similarity;
  if (similarity >= best->second) ++e.best_hits;
}

double ValueMatrix::best_probability(const std::string& slot, const ParticipantId& candidate) const {
  const auto* e = find(slot, candidate);
  if (e == nullptr || e->trials == 0) return 1.0;
  return static_cast<double>(e->best_hits) / static_cast<double>(e->trials);
}

double ValueMatrix::expected_similarity(const std::string& slot, const ParticipantId& candidate,
                                        double advertised) const {
  const auto* e = find(slot, candidate);
  if (e == nullptr || e->trials == 0) return advertised;
  return e->sim_sum / static_cast<double>(e->trials);
}

double ValueMatrix::block_reward(const std::string& slot, const ParticipantId& candidate, double advertised) const {
  return best_probability(slot, candidate) * expected_similarity(slot, candidate, advertised);
}

double ValueMatrix::value_or_prior(const std::string& slot, const ParticipantId& candidate, double advertised) const {
  const auto* e = find(slot, candidate);
  if (e == nullptr || e->updates == 0) return block_reward(slot, candidate, advertised);
  return e->value;
}

double ValueMatrix::slot_best(const std::string& slot) const {
  const auto it = slot_best_.find(slot);
  return it == slot_best_.end() ? 0.0 : it->second;
}

double chain_reward(std::span<const PatternStep> pattern, const ValueMatrix& matrix) {
  double rw = 0.0;
  for (const auto& step : pattern) rw += matrix.block_reward(step.slot, step.candidate, step.advertised);
  return rw;
}

}  // namespace volchain::chain
