#pragma once

#include <cstddef>
#include <vector>

#include "volchain/domain/types.hpp"

namespace volchain::behavior {

struct StatusPolicy {
  std::size_t max_declines = 5;        // declines inside the invitation window that trigger a ban
  std::size_t invitation_window = 20;  // invitations remembered per participant
  std::size_t greedy_min_sample = 10;  // invitations needed before the greedy rule applies
  double greedy_quantile = 0.75;
};

/// Remembers an invitation and refreshes decline_count to the number of
/// declines inside the window.
void note_invitation(Participant& p, double offered_reward, bool accepted, const StatusPolicy& policy);

/// True when every accepted invitation in the window offered at least the
/// window's `greedy_quantile` reward, with at least one accept and one
/// decline on record.
bool is_greedy(const Participant& p, const StatusPolicy& policy);

/// Recomputes the participation status. Withdrawn is final. A participant is
/// banned from providing (it may still request) when it is ranked
/// non-cooperative or worse, declines too often, or only takes the most
/// lucrative invitations; otherwise it is active.
Participant update_status(const Participant& p, const StatusPolicy& policy);

struct TrustPolicy {
  double kappa = 0.1;
  double target_participants = 500.0;
  double min_threshold = 0.5;
  double max_threshold = 0.9;
};

/// Linear adaptation of the miner trust threshold to network size: sparse
/// networks relax it, dense ones tighten it, within [min, max].
double update_trust_threshold(double current, std::size_t participant_count, const TrustPolicy& policy);

struct MinerPolicy {
  double cap_fraction = 0.10;  // at most this share of the pool holds the miner role
  double hysteresis = 0.05;    // miners keep the role until C_n falls below threshold - hysteresis
};

/// Demotes miners that are inactive or fell below the hysteresis band, then
/// promotes active participants with C_n >= threshold, best C_n first (ties
/// by id), until the cap is reached. Returns the number of miners.
std::size_t promote_miners(std::vector<Participant>& pool, double threshold, const MinerPolicy& policy);

std::size_t miner_cap(std::size_t pool_size, const MinerPolicy& policy);

}  // namespace volchain::behavior
