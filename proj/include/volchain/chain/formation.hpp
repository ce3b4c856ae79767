#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "volchain/behavior/ranking.hpp"
#include "volchain/chain/block.hpp"
#include "volchain/chain/value_matrix.hpp"
#include "volchain/domain/types.hpp"
#include "volchain/incentive/selection.hpp"
#include "volchain/workflow/net.hpp"

namespace volchain::chain {

/// Capabilities advertised to the fog by registered participants.
class CapabilityRegistry {
 public:
  void advertise(const Participant& p);
  /// True when some single advertiser holds every tag in `required`.
  bool covers(const FeatureSet& required) const;
  std::size_t size() const noexcept { return advertised_.size(); }

 private:
  std::vector<FeatureSet> advertised_;
};

CapabilityRegistry build_registry(std::span<const Participant> pool);

enum class SearchKind { simple, complex };
std::string_view to_string(SearchKind k);

struct ClassifyParams {
  double stringent_qos_floor = 0.9;
  double relaxed_deadline_slack = 5.0;  // seconds of critical-path slack
  double reference_cpu_rate = 1e9;      // cycles/s used to estimate the slack
};

/// Deadline budget minus nominal compute time along the longest dependency
/// path, in seconds.
double deadline_slack(const ServiceRequest& req, const ClassifyParams& params);

/// Complex when some task needs a capability nobody advertised, or the
/// request pairs a stringent quality floor with a relaxed deadline.
SearchKind classify_request(const ServiceRequest& req, const CapabilityRegistry& registry,
                            const ClassifyParams& params);

/// Slot identifying a block position by the kind of task it holds.
std::string slot_key(const Task& task);

/// Input interface of a block: the task characteristics plus whatever the
/// participant brings that the request asks for.
FeatureSet block_input(const Task& task, const Participant& p, const FeatureSet& description);
/// Output interface: the input enriched with the capability the task exercises.
FeatureSet block_output(const Task& task, const FeatureSet& input);

struct CandidateOption {
  ParticipantId participant;
  FeatureSet input;
  FeatureSet output;
  double anticipated_gain = 0.0;
  std::optional<ParticipantId> miner;  // set when a miner found this candidate
};

/// One block position of the composition, in execution order.
struct Position {
  const Task* task = nullptr;
  std::string slot;
  std::vector<CandidateOption> options;
};

/// Picks one option per position, in order, by the learned value of the
/// option (optimistic prior for unvisited entries, advertised similarity
/// against the previously picked output). Ties go to the higher anticipated
/// gain, then the smaller id. With probability `epsilon` a position is
/// filled uniformly at random instead; `rng` may be null to disable that.
std::vector<std::size_t> choose_by_value(std::span<const Position> positions, const FeatureSet& description,
                                         const ValueMatrix& matrix, const RewardParams& params, double epsilon,
                                         std::mt19937_64* rng);

struct SimilarityWeights {
  double block = 0.5;     // previous output vs candidate input
  double next = 0.25;     // candidate output vs the next task's requirements
  double request = 0.25;  // candidate output vs the request description

  void validate() const;
};

/// Requirements the next position expects: its task's characteristics and
/// required capability; the request description after the last position.
FeatureSet next_requirement(std::span<const Position> positions, std::size_t n, const FeatureSet& description);

/// Weighted similarity objective of a full pick, summed over positions. The
/// previous output of position 0 is the request description.
double formation_objective(std::span<const Position> positions, std::span<const std::size_t> picks,
                           const FeatureSet& description, const SimilarityWeights& w, const RewardParams& params);

/// Exact maximizer of formation_objective (dynamic programming over the
/// position sequence). Ties resolve toward lower option indices.
std::vector<std::size_t> choose_by_similarity(std::span<const Position> positions, const FeatureSet& description,
                                              const SimilarityWeights& w, const RewardParams& params);

struct MinerReport {
  ParticipantId miner;
  CandidateOption option;
  double sim_block = 0.0;
  double sim_next = 0.0;
  double sim_request = 0.0;
  double score = 0.0;  // weighted sum
};

struct MinerSearchParams {
  double range_m = 250.0;  // direct (ad hoc) reach of a miner
  std::size_t top_k = 2;
  SimilarityWeights weights;
  incentive::SelectionPolicy policy;
};

/// What one miner finds for `task`: active, capable, preference-matching
/// participants within range (other than itself) that agree with a positive
/// anticipated gain (`gain_of`), scored against the expected previous output
/// and the downstream requirements, best `top_k` first (ties by id).
std::vector<MinerReport> miner_search(const Participant& miner, const Task& task, std::span<const Participant> pool,
                                      const FeatureSet& expected_prev_output, const FeatureSet& next_req,
                                      const FeatureSet& description, const RewardParams& params,
                                      const MinerSearchParams& search,
                                      const std::function<double(const Participant&, const Task&)>& gain_of);

/// Merges reports from several miners into options for one position: the
/// fog keeps candidates with positive anticipated gain, credits each to the
/// miner that reported it with the best score (ties by miner id), and
/// orders them by candidate id.
std::vector<CandidateOption> merge_reports(std::span<const MinerReport> reports);

/// ceil((k + 1) / 2) signatures out of a committee of k.
std::size_t quorum(std::size_t committee_size);

/// Committee members that recompute the block hash sign it; sensitive
/// blocks are attested by the fog alone. Returns true when committed
/// (quorum reached, or the fog signed a sensitive block).
bool attest_block(Block& block, std::span<const std::string> committee, const std::string& fog);

enum class PostingRole { participant, miner };

struct Posting {
  ParticipantId recipient;
  PostingRole role = PostingRole::participant;
  Credits amount;
  std::size_t block = 0;
};

struct Distribution {
  bool applied = false;  // false when this chain was already paid out
  std::vector<Posting> postings;
};

/// Pays out complete chains exactly once. Each block's reward goes to its
/// participant, or is split with its miner by the miner share.
class RewardBook {
 public:
  /// Throws StateError unless the chain is complete.
  Distribution distribute(const Chain& chain, const RewardParams& params);

  Credits balance(const ParticipantId& id) const;
  Credits total(PostingRole role) const;
  const std::vector<Posting>& postings() const noexcept { return postings_; }

 private:
  std::set<std::string> paid_chains_;  // genesis hash (hex)
  std::vector<Posting> postings_;
};

/// Per-block reward credited to the participant: reward minus penalty,
/// floored at zero, in credits.
Credits block_reward_credits(const Task& task, const QoSSpec& qos, const ActualOutcome& outcome,
                             const RewardParams& params);

/// Runs one task on one participant for the synchronous drivers below.
using Executor = std::function<ActualOutcome(const Participant&, const Task&)>;

struct FormationParams {
  RewardParams reward;
  incentive::SelectionPolicy policy;
  double epsilon = 0.1;
  double chaining_floor = 0.0;  // minimum realized block-to-block similarity
  ParticipantId fog{"fog"};
  SimilarityWeights weights;
  MinerSearchParams miner_search;
};

struct FormationResult {
  Chain chain;
  std::vector<std::size_t> picks;  // option index per position
  std::vector<Position> positions;
  Distribution rewards;
  std::vector<behavior::RankEvent> ranks;
};

/// Builds the positions of a request in dependency order. Options are the
/// plan's ranked candidates for each task whose C_n is within `c1_band` of
/// the best one, in id order.
std::vector<Position> registry_positions(const ServiceRequest& req, const workflow::WorkflowNet& plan,
                                         std::span<const Participant> pool, double c1_band,
                                         const std::function<double(const Participant&, const Task&)>& gain_of);

/// Score a participant earns from its peers and the fog for one task:
/// 0.6 x quality + 0.4 x timeliness (1 when on time, deadline / completion
/// time when late, 0 when not completed).
double rank_score(const Task& task, const ActualOutcome& outcome);

/// Forms a chain with registry candidates only: choose by value, execute in
/// plan order, append blocks, learn from realized similarities, pay out and
/// collect mutual rankings. A task without a willing candidate fails the
/// chain; blocks formed so far are kept.
FormationResult simple_search(const ServiceRequest& req, const workflow::WorkflowNet& plan,
                              std::span<const Participant> pool, ValueMatrix& matrix, RewardBook& book,
                              const FormationParams& params, const Executor& execute,
                              const std::function<double(const Participant&, const Task&)>& gain_of,
                              std::mt19937_64* rng);

/// Like simple_search, but tasks whose capability is not advertised are
/// filled from miner reports and the fog picks the whole set by the
/// similarity objective. Fails naming the capability when no miner finds it.
FormationResult complex_search(const ServiceRequest& req, const workflow::WorkflowNet& plan,
                               std::span<const Participant> pool, const CapabilityRegistry& registry,
                               ValueMatrix& matrix, RewardBook& book, const FormationParams& params,
                               const Executor& execute,
                               const std::function<double(const Participant&, const Task&)>& gain_of,
                               std::mt19937_64* rng);

}  // namespace volchain::chain
