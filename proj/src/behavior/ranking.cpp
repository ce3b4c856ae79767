#include "volchain/behavior/ranking.hpp"

#include "volchain/domain/text_record.hpp"

namespace volchain::behavior {

std::string_view to_string(RaterKind k) {
  switch (k) {
    case RaterKind::participant: return "participant";
    case RaterKind::fog: return "fog";
    case RaterKind::trusted_entity: return "trusted-entity";
  }
  return "participant";
}

void RankLedger::record(const RankEvent& event, const CompositionMembers& composition) {
  if (event.rater == event.ratee.str()) throw RankRejected("self-rating by '" + event.rater + "'");
  if (!(event.score >= 0.0 && event.score <= 1.0)) {
    throw RankRejected("score " + format_real(event.score) + " outside [0,1]");
  }
  if (!composition.members.contains(event.ratee)) {
    throw RankRejected("ratee '" + event.ratee.str() + "' did not take part in the composition");
  }
  const bool is_fog = event.rater_kind == RaterKind::fog && event.rater == composition.fog;
  const bool cooperated = event.rater_kind != RaterKind::fog && composition.members.contains(ParticipantId(event.rater));
  if (!is_fog && !cooperated) {
    throw RankRejected("rater '" + event.rater + "' did not cooperate with '" + event.ratee.str() + "'");
  }
  by_ratee_[event.ratee].push_back(events_.size());
  events_.push_back(event);
}

const std::vector<std::size_t>& RankLedger::received(const ParticipantId& ratee) const {
  static const std::vector<std::size_t> none;
  const auto it = by_ratee_.find(ratee);
  return it == by_ratee_.end() ? none : it->second;
}

std::string RankLedger::to_csv() const {
  std::string out = "#schema=ranks/1\nrater_kind,rater,ratee,task,score,time\n";
  for (const auto& e : events_) {
    out += std::string(to_string(e.rater_kind)) + "," + e.rater + "," + e.ratee.str() + "," + e.task.str() + "," +
           format_real(e.score) + "," + format_real(e.time) + "\n";
  }
  return out;
}

double aggregate_score(const ParticipantId& ratee, const RankLedger& ledger, std::size_t window,
                       const AggregateConfig& cfg) {
  if (window == 0) throw ParameterError("aggregation window must be >= 1");
  const auto& idx = ledger.received(ratee);
  if (idx.empty()) return cfg.prior;
  const std::size_t first = idx.size() > window ? idx.size() - window : 0;
  double weighted = 0.0;
  double weights = 0.0;
  for (std::size_t i = first; i < idx.size(); ++i) {
    const auto& e = ledger.events()[idx[i]];
    const double w = e.rater_kind == RaterKind::fog ? cfg.fog_weight : 1.0;
    weighted += w * e.score;
    weights += w;
  }
  return weights > 0.0 ? weighted / weights : cfg.prior;
}

}  // namespace volchain::behavior
