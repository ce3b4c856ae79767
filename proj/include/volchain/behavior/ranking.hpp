#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "volchain/domain/errors.hpp"
#include "volchain/domain/types.hpp"

namespace volchain::behavior {

enum class RaterKind { participant, fog, trusted_entity };
std::string_view to_string(RaterKind k);

struct RankEvent {
  RaterKind rater_kind = RaterKind::participant;
  std::string rater;  // participant id, fog id or trusted-entity id
  ParticipantId ratee;
  TaskId task;
  double score = 0.0;  // [0,1]
  double time = 0.0;
};

/// Who took part in one composition, and which fog served it.
struct CompositionMembers {
  std::set<ParticipantId> members;
  std::string fog;
};

class RankRejected : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Append-only store of rank events.
class RankLedger {
 public:
  /// Appends `event`, or throws RankRejected when the rater rates itself,
  /// the score is outside [0,1], the ratee was not part of the composition,
  /// or the rater neither took part nor is the serving fog.
  void record(const RankEvent& event, const CompositionMembers& composition);

  const std::vector<RankEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }

  /// Indices into events() of the ratings received by `ratee`, oldest first.
  const std::vector<std::size_t>& received(const ParticipantId& ratee) const;

  /// CSV export: header row, then rater_kind,rater,ratee,task,score,time.
  std::string to_csv() const;

 private:
  std::vector<RankEvent> events_;
  std::unordered_map<ParticipantId, std::vector<std::size_t>> by_ratee_;
};

struct AggregateConfig {
  double prior = 0.5;       // score of a participant nobody has rated yet
  double fog_weight = 1.0;  // relative weight of fog ratings against peer ratings
};

/// Weighted mean of the most recent `window` scores received by `ratee`.
/// Throws ParameterError when window is 0.
double aggregate_score(const ParticipantId& ratee, const RankLedger& ledger, std::size_t window,
                       const AggregateConfig& cfg = {});

}  // namespace volchain::behavior
