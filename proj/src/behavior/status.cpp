#include "volchain/behavior/status.hpp"

#include <algorithm>
#include <cmath>

#include "volchain/domain/errors.hpp"

namespace volchain::behavior {

namespace {

// Linear interpolation between closest ranks.
double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace

void note_invitation(Participant& p, double offered_reward, bool accepted, const StatusPolicy& policy) {
  push_bounded(p.invitations, InvitationRecord{offered_reward, accepted}, policy.invitation_window);
  p.decline_count = static_cast<std::size_t>(
      std::count_if(p.invitations.begin(), p.invitations.end(), [](const InvitationRecord& r) { return !r.accepted; }));
}

bool is_greedy(const Participant& p, const StatusPolicy& policy) {
  if (p.invitations.size() < std::max<std::size_t>(policy.greedy_min_sample, 2)) return false;
  std::vector<double> offers;
  bool any_accept = false;
  bool any_decline = false;
  for (const auto& r : p.invitations) {
    offers.push_back(r.offered_reward);
    (r.accepted ? any_accept : any_decline) = true;
  }
  if (!any_accept || !any_decline) return false;
  const double cut = quantile(std::move(offers), policy.greedy_quantile);
  return std::all_of(p.invitations.begin(), p.invitations.end(),
                     [&](const InvitationRecord& r) { return !r.accepted || r.offered_reward >= cut; });
}

Participant update_status(const Participant& p, const StatusPolicy& policy) {
  Participant out = p;
  if (p.status == ParticipantStatus::withdrawn) return out;
  const bool poorly_ranked = p.category <= CoopCategory::NonCooperative;
  const bool declines_too_often = p.decline_count >= policy.max_declines;
  out.status = (poorly_ranked || declines_too_often || is_greedy(p, policy)) ? ParticipantStatus::banned
                                                                             : ParticipantStatus::active;
  return out;
}

double update_trust_threshold(double current, std::size_t participant_count, const TrustPolicy& policy) {
  if (!(current >= 0.0 && current <= 1.0)) throw ParameterError("trust threshold must lie in [0,1]");
  if (!(policy.target_participants > 0.0)) throw ParameterError("target participant count must be positive");
  if (!(policy.min_threshold <= policy.max_threshold)) throw ParameterError("min threshold above max threshold");
  const double drift =
      policy.kappa * (static_cast<double>(participant_count) - policy.target_participants) / policy.target_participants;
  return std::clamp(current + drift, policy.min_threshold, policy.max_threshold);
}

std::size_t miner_cap(std::size_t pool_size, const MinerPolicy& policy) {
  return static_cast<std::size_t>(std::floor(policy.cap_fraction * static_cast<double>(pool_size) + 1e-9));
}

std::size_t promote_miners(std::vector<Participant>& pool, double threshold, const MinerPolicy& policy) {
  const auto by_rank = [](const Participant* a, const Participant* b) {
    if (a->coop_score_c != b->coop_score_c) return a->coop_score_c > b->coop_score_c;
    return a->id < b->id;
  };

  std::vector<Participant*> miners;
  std::vector<Participant*> eligible;
  for (auto& p : pool) {
    if (p.is_miner && (p.status != ParticipantStatus::active || p.coop_score_c < threshold - policy.hysteresis)) {
      p.is_miner = false;
    }
    if (p.is_miner) {
      miners.push_back(&p);
    } else if (p.status == ParticipantStatus::active && p.coop_score_c >= threshold) {
      eligible.push_back(&p);
    }
  }

  const auto cap = miner_cap(pool.size(), policy);
  std::sort(miners.begin(), miners.end(), by_rank);
  while (miners.size() > cap) {
    miners.back()->is_miner = false;
    miners.pop_back();
  }
  std::sort(eligible.begin(), eligible.end(), by_rank);
  for (auto* p : eligible) {
    if (miners.size() >= cap) break;
    p->is_miner = true;
    miners.push_back(p);
  }
  return miners.size();
}

}  // namespace volchain::behavior
