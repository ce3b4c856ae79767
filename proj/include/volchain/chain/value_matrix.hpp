#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>

#include "volchain/domain/types.hpp"

namespace volchain::chain {

struct ValueEntry {
  double value = 0.0;           // V, moved toward its target at rate rho
  std::uint64_t updates = 0;    // times V was updated
  std::uint64_t trials = 0;     // realized similarities recorded
  std::uint64_t best_hits = 0;  // trials that matched the slot's best similarity so far
  double sim_sum = 0.0;         // sum of realized similarities

  friend bool operator==(const ValueEntry&, const ValueEntry&) = default;
};

/// Learned values per (slot, candidate). A slot identifies a block position
/// by the kind of task it holds, so experience carries over between
/// requests that need the same kind of task.
class ValueMatrix {
 public:
  explicit ValueMatrix(double rho = 0.1);

  double rho() const noexcept { return rho_; }
  const ValueEntry* find(const std::string& slot, const ParticipantId& candidate) const;

  /// V <- V + rho * (target - V).
  void update_value(const std::string& slot, const ParticipantId& candidate, double target);

  /// Records one realized similarity. The trial counts as a best hit when it
  /// reaches the highest similarity seen in the slot so far.
  void record_similarity(const std::string& slot, const ParticipantId& candidate, double similarity);

  /// Estimated probability of reaching the slot's best similarity and the
  /// expected similarity, from the recorded trials. Unvisited entries use
  /// the optimistic prior (1, advertised).
  double best_probability(const std::string& slot, const ParticipantId& candidate) const;
  double expected_similarity(const std::string& slot, const ParticipantId& candidate, double advertised) const;

  /// Contribution of one block to the chain reward: probability x expected.
  double block_reward(const std::string& slot, const ParticipantId& candidate, double advertised) const;

  /// V when the entry has been updated, otherwise the optimistic prior
  /// block_reward(..., advertised).
  double value_or_prior(const std::string& slot, const ParticipantId& candidate, double advertised) const;

  double slot_best(const std::string& slot) const;
  std::size_t size() const noexcept { return entries_.size(); }
  const std::map<std::pair<std::string, ParticipantId>, ValueEntry>& entries() const noexcept { return entries_; }

 private:
  double rho_;
  std::map<std::pair<std::string, ParticipantId>, ValueEntry> entries_;
  std::map<std::string, double> slot_best_;
};

struct PatternStep {
  std::string slot;
  ParticipantId candidate;
  double advertised = 0.0;  // similarity claimed before any trial
};

/// Chain reward of a block pattern: sum over blocks of
/// best_probability x expected_similarity. Empty pattern gives 0.
double chain_reward(std::span<const PatternStep> pattern, const ValueMatrix& matrix);

}  // namespace volchain::chain
