#include "volchain/chain/formation.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "volchain/domain/errors.hpp"
#include "volchain/domain/validation.hpp"
#include "volchain/incentive/gain.hpp"
#include "volchain/similarity/similarity.hpp"

namespace volchain::chain {

using similarity::comp_char;

void CapabilityRegistry::advertise(const Participant& p) { advertised_.push_back(p.capabilities); }

bool CapabilityRegistry::covers(const FeatureSet& required) const {
  return std::any_of(advertised_.begin(), advertised_.end(),
                     [&](const FeatureSet& caps) { return required.is_subset_of(caps); });
}

CapabilityRegistry build_registry(std::span<const Participant> pool) {
  CapabilityRegistry r;
  for (const auto& p : pool) {
    if (p.registered && p.status == ParticipantStatus::active) r.advertise(p);
  }
  return r;
}

std::string_view to_string(SearchKind k) { return k == SearchKind::simple ? "simple" : "complex"; }

double deadline_slack(const ServiceRequest& req, const ClassifyParams& params) {
  const auto order = topological_order(req);
  std::map<TaskId, std::pair<double, double>> path;  // (deadline budget, compute) along the longest path
  double best_slack_budget = 0.0;
  double best_compute = 0.0;
  for (const auto i : order) {
    const auto& t = req.tasks[i];
    std::pair<double, double> acc{0.0, 0.0};
    for (const auto& dep : t.deps_beta) {
      const auto& d = path.at(dep);
      if (d.first > acc.first) acc = d;
    }
    acc.first += t.deadline_gamma;
    acc.second += t.size_alpha * t.intensity_delta / params.reference_cpu_rate;
    path[t.id] = acc;
    if (acc.first > best_slack_budget) {
      best_slack_budget = acc.first;
      best_compute = acc.second;
    }
  }
  return best_slack_budget - best_compute;
}

SearchKind classify_request(const ServiceRequest& req, const CapabilityRegistry& registry,
                            const ClassifyParams& params) {
  for (const auto& t : req.tasks) {
    if (!registry.covers(t.required_capability)) return SearchKind::complex;
  }
  if (req.qos_q.floor >= params.stringent_qos_floor && deadline_slack(req, params) >= params.relaxed_deadline_slack) {
    return SearchKind::complex;
  }
  return SearchKind::simple;
}

std::string slot_key(const Task& task) {
  return "cap:" + task.required_capability.to_text() + "|char:" + task.characteristics.to_text();
}

FeatureSet block_input(const Task& task, const Participant& p, const FeatureSet& description) {
  return task.characteristics.united(p.capabilities.intersected(description));
}

FeatureSet block_output(const Task& task, const FeatureSet& input) { return input.united(task.required_capability); }

std::vector<std::size_t> choose_by_value(std::span<const Position> positions, const FeatureSet& description,
                                         const ValueMatrix& matrix, const RewardParams& params, double epsilon,
                                         std::mt19937_64* rng) {
  std::vector<std::size_t> picks;
  const FeatureSet* prev = &description;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (const auto& pos : positions) {
    if (pos.options.empty()) throw StateError("position without options");
    std::size_t pick = 0;
    if (rng != nullptr && epsilon > 0.0 && coin(*rng) < epsilon) {
      pick = std::uniform_int_distribution<std::size_t>(0, pos.options.size() - 1)(*rng);
    } else {
      double best_v = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < pos.options.size(); ++i) {
        const auto& o = pos.options[i];
        const double v = matrix.value_or_prior(pos.slot, o.participant, comp_char(*prev, o.input, params));
        const auto& b = pos.options[pick];
        const bool better = v > best_v ||
                            (v == best_v && (o.anticipated_gain > b.anticipated_gain ||
                                             (o.anticipated_gain == b.anticipated_gain && o.participant < b.participant)));
        if (i == 0 || better) {
          pick = i;
          best_v = v;
        }
      }
    }
    picks.push_back(pick);
    prev = &pos.options[pick].output;
  }
  return picks;
}

void SimilarityWeights::validate() const {
  if (!(block >= 0.0 && next >= 0.0 && request >= 0.0) || !(block + next + request > 0.0)) {
    throw ParameterError("similarity weights must be nonnegative with a positive sum");
  }
}

FeatureSet next_requirement(std::span<const Position> positions, std::size_t n, const FeatureSet& description) {
  if (n + 1 >= positions.size()) return description;
  const auto* t = positions[n + 1].task;
  return t->characteristics.united(t->required_capability);
}

namespace {

double position_score(const FeatureSet& prev_output, const CandidateOption& o, const FeatureSet& next_req,
                      const FeatureSet& description, const SimilarityWeights& w, const RewardParams& params) {
  return w.block * comp_char(prev_output, o.input, params) + w.next * comp_char(o.output, next_req, params) +
         w.request * comp_char(o.output, description, params);
}

}  // namespace

double formation_objective(std::span<const Position> positions, std::span<const std::size_t> picks,
                           const FeatureSet& description, const SimilarityWeights& w, const RewardParams& params) {
  double total = 0.0;
  const FeatureSet* prev = &description;
  for (std::size_t n = 0; n < positions.size(); ++n) {
    const auto& o = positions[n].options.at(picks[n]);
    total += position_score(*prev, o, next_requirement(positions, n, description), description, w, params);
    prev = &o.output;
  }
  return total;
}

std::vector<std::size_t> choose_by_similarity(std::span<const Position> positions, const FeatureSet& description,
                                              const SimilarityWeights& w, const RewardParams& params) {
  w.validate();
  const std::size_t n = positions.size();
  if (n == 0) return {};
  // best[k][i]: best objective of positions 0..k with option i at k.
  std::vector<std::vector<double>> best(n);
  std::vector<std::vector<std::size_t>> from(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& pos = positions[k];
    if (pos.options.empty()) throw StateError("position without options");
    const auto next_req = next_requirement(positions, k, description);
    best[k].assign(pos.options.size(), -std::numeric_limits<double>::infinity());
    from[k].assign(pos.options.size(), 0);
    for (std::size_t i = 0; i < pos.options.size(); ++i) {
      const auto& o = pos.options[i];
      if (k == 0) {
        best[k][i] = position_score(description, o, next_req, description, w, params);
        continue;
      }
      for (std::size_t j = 0; j < positions[k - 1].options.size(); ++j) {
        const double v =
            best[k - 1][j] + position_score(positions[k - 1].options[j].output, o, next_req, description, w, params);
        if (v > best[k][i]) {
          best[k][i] = v;
          from[k][i] = j;
        }
      }
    }
  }
  std::vector<std::size_t> picks(n, 0);
  for (std::size_t i = 1; i < best[n - 1].size(); ++i) {
    if (best[n - 1][i] > best[n - 1][picks[n - 1]]) picks[n - 1] = i;
  }
  for (std::size_t k = n - 1; k > 0; --k) picks[k - 1] = from[k][picks[k]];
  return picks;
}

std::vector<MinerReport> miner_search(const Participant& miner, const Task& task, std::span<const Participant> pool,
                                      const FeatureSet& expected_prev_output, const FeatureSet& next_req,
                                      const FeatureSet& description, const RewardParams& params,
                                      const MinerSearchParams& search,
                                      const std::function<double(const Participant&, const Task&)>& gain_of) {
  std::vector<MinerReport> found;
  for (const auto& p : pool) {
    if (p.id == miner.id || p.status != ParticipantStatus::active) continue;
    if (distance(p.position, miner.position) > search.range_m) continue;
    if (!similarity::capability_match(p, task)) continue;
    if (!similarity::task_preference_match(p, task, params, search.policy.preference_threshold)) continue;
    MinerReport r;
    r.miner = miner.id;
    r.option.participant = p.id;
    r.option.input = block_input(task, p, description);
    r.option.output = block_output(task, r.option.input);
    r.option.anticipated_gain = gain_of(p, task);
    if (!(r.option.anticipated_gain > 0.0)) continue;  // declined, or would lose on it
    r.option.miner = miner.id;
    r.sim_block = comp_char(expected_prev_output, r.option.input, params);
    r.sim_next = comp_char(r.option.output, next_req, params);
    r.sim_request = comp_char(r.option.output, description, params);
    r.score = search.weights.block * r.sim_block + search.weights.next * r.sim_next +
              search.weights.request * r.sim_request;
    found.push_back(std::move(r));
  }
  std::sort(found.begin(), found.end(), [](const MinerReport& a, const MinerReport& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.option.participant < b.option.participant;
  });
  if (found.size() > search.top_k) found.resize(search.top_k);
  return found;
}

std::vector<CandidateOption> merge_reports(std::span<const MinerReport> reports) {
  std::map<ParticipantId, const MinerReport*> best;
  for (const auto& r : reports) {
    if (!(r.option.anticipated_gain > 0.0)) continue;
    auto& slot = best[r.option.participant];
    if (slot == nullptr || r.score > slot->score || (r.score == slot->score && r.miner < slot->miner)) slot = &r;
  }
  std::vector<CandidateOption> out;
  for (const auto& [id, r] : best) out.push_back(r->option);
  return out;
}

std::size_t quorum(std::size_t committee_size) { return (committee_size + 2) / 2; }

bool attest_block(Block& block, std::span<const std::string> committee, const std::string& fog) {
  block.attestations.clear();
  const bool intact = compute_hash(block) == block.hash;
  if (block.sensitive) {
    if (intact) block.attestations.push_back(attest(fog, block.hash));
    return intact;
  }
  std::vector<std::string> members(committee.begin(), committee.end());
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  if (!intact) return false;
  for (const auto& m : members) block.attestations.push_back(attest(m, block.hash));
  return block.attestations.size() >= quorum(members.size());
}

Distribution RewardBook::distribute(const Chain& chain, const RewardParams& params) {
  if (chain.status != ChainStatus::complete) throw StateError("rewards are paid only for complete chains");
  if (chain.blocks.empty()) throw StateError("chain has no genesis block");
  Distribution d;
  if (!paid_chains_.insert(to_hex(chain.genesis().hash)).second) return d;
  d.applied = true;
  for (std::size_t i = 1; i < chain.blocks.size(); ++i) {
    const auto& b = chain.blocks[i];
    if (b.miner) {
      const auto shares = incentive::miner_reward(b.reward_paid, params);
      d.postings.push_back({b.participant, PostingRole::participant, shares.participant, i});
      d.postings.push_back({*b.miner, PostingRole::miner, shares.miner, i});
    } else {
      d.postings.push_back({b.participant, PostingRole::participant, b.reward_paid, i});
    }
  }
  postings_.insert(postings_.end(), d.postings.begin(), d.postings.end());
  return d;
}

Credits RewardBook::balance(const ParticipantId& id) const {
  Credits sum;
  for (const auto& p : postings_) {
    if (p.recipient == id) sum += p.amount;
  }
  return sum;
}

Credits RewardBook::total(PostingRole role) const {
  Credits sum;
  for (const auto& p : postings_) {
    if (p.role == role) sum += p.amount;
  }
  return sum;
}

Credits block_reward_credits(const Task& task, const QoSSpec& qos, const ActualOutcome& outcome,
                             const RewardParams& params) {
  const incentive::TaskExecution e{task.deadline_gamma, qos, outcome};
  const auto g = incentive::compute_gain(e, params);
  return Credits::from_units(std::max(0.0, g.reward_r - g.penalty_p));
}

std::vector<Position> registry_positions(const ServiceRequest& req, const workflow::WorkflowNet& plan,
                                         std::span<const Participant> pool, double c1_band,
                                         const std::function<double(const Participant&, const Task&)>& gain_of) {
  std::map<ParticipantId, const Participant*> by_id;
  for (const auto& p : pool) by_id.emplace(p.id, &p);

  std::vector<Position> positions;
  for (const auto i : topological_order(req)) {
    const auto& task = req.tasks[i];
    Position pos{&task, slot_key(task), {}};
    const auto t = plan.find_transition(task.id);
    if (!t) throw StateError("plan has no transition for task '" + task.id.str() + "'");
    std::vector<const Participant*> listed;
    if (const auto it = plan.candidates.find(*t); it != plan.candidates.end()) {
      for (const auto& id : it->second) {
        if (const auto p = by_id.find(id); p != by_id.end()) listed.push_back(p->second);
      }
    }
    // The plan ranks by C_n, so the first entry sets the cooperation bar.
    if (!listed.empty()) {
      const double bar = listed.front()->coop_score_c - c1_band;
      std::erase_if(listed, [&](const Participant* p) { return p->coop_score_c < bar; });
    }
    std::sort(listed.begin(), listed.end(), [](const Participant* a, const Participant* b) { return a->id < b->id; });
    for (const auto* p : listed) {
      CandidateOption o;
      o.participant = p->id;
      o.input = block_input(task, *p, req.description_d);
      o.output = block_output(task, o.input);
      o.anticipated_gain = gain_of(*p, task);
      pos.options.push_back(std::move(o));
    }
    positions.push_back(std::move(pos));
  }
  return positions;
}


namespace {

const Participant& lookup(std::span<const Participant> pool, const ParticipantId& id) {
  const auto it = std::find_if(pool.begin(), pool.end(), [&](const Participant& p) { return p.id == id; });
  if (it == pool.end()) throw StateError("unknown participant '" + id.str() + "'");
  return *it;
}

void run_pattern(FormationResult& result, const ServiceRequest& req, std::span<const Participant> pool,
                 ValueMatrix& matrix, RewardBook& book, const FormationParams& params, const Executor& execute) {
  auto& chain = result.chain;
  std::vector<std::string> committee;
  for (std::size_t n = 0; n < result.positions.size(); ++n) {
    committee.push_back(result.positions[n].options[result.picks[n]].participant.str());
  }

  const FeatureSet* prev = &req.description_d;
  std::map<ParticipantId, std::vector<double>> scores;
  for (std::size_t n = 0; n < result.positions.size(); ++n) {
    const auto& pos = result.positions[n];
    const auto& opt = pos.options[result.picks[n]];
    const auto& p = lookup(pool, opt.participant);
    const auto outcome = execute(p, *pos.task);
    const double advertised = comp_char(*prev, opt.input, params.reward);
    const double realized = outcome.completed ? advertised * outcome.achieved_q : 0.0;
    matrix.record_similarity(pos.slot, opt.participant, realized);
    matrix.update_value(pos.slot, opt.participant, matrix.block_reward(pos.slot, opt.participant, advertised));

    BlockFields f;
    f.task = pos.task->id;
    f.participant = opt.participant;
    f.miner = opt.miner;
    f.input_features = opt.input;
    f.output_features = opt.output;
    f.outcome = outcome;
    f.reward_paid = block_reward_credits(*pos.task, req.qos_q, outcome, params.reward);
    f.timestamp = req.arrival_time + outcome.completion_time;
    f.sensitive = pos.task->sensitive;
    auto& block = append_block(chain, std::move(f));
    attest_block(block, committee, params.fog.str());
    scores[opt.participant].push_back(rank_score(*pos.task, outcome));

    if (!outcome.completed) {
      fail_chain(chain, "task '" + pos.task->id.str() + "' was not completed");
      return;
    }
    if (advertised < params.chaining_floor) {
      fail_chain(chain, "block for task '" + pos.task->id.str() + "' is below the chaining floor");
      return;
    }
    prev = &opt.output;
  }
  complete_chain(chain);
  result.rewards = book.distribute(chain, params.reward);

  behavior::CompositionMembers members;
  members.fog = params.fog.str();
  for (const auto& [id, s] : scores) members.members.insert(id);
  for (const auto& [ratee, s] : scores) {
    double mean = 0.0;
    for (const auto v : s) mean += v;
    mean /= static_cast<double>(s.size());
    const double t = chain.blocks.back().timestamp;
    for (const auto& [rater, unused] : scores) {
      if (rater == ratee) continue;
      result.ranks.push_back({behavior::RaterKind::participant, rater.str(), ratee, TaskId(), mean, t});
    }
    result.ranks.push_back({behavior::RaterKind::fog, params.fog.str(), ratee, TaskId(), mean, t});
  }
}

}  // namespace

double rank_score(const Task& task, const ActualOutcome& outcome) {
  if (!outcome.completed) return 0.0;
  const double timeliness = outcome.completion_time <= task.deadline_gamma || outcome.completion_time <= 0.0
                                ? 1.0
                                : task.deadline_gamma / outcome.completion_time;
  return 0.6 * outcome.achieved_q + 0.4 * timeliness;
}

FormationResult simple_search(const ServiceRequest& req, const workflow::WorkflowNet& plan,
                              std::span<const Participant> pool, ValueMatrix& matrix, RewardBook& book,
                              const FormationParams& params, const Executor& execute,
                              const std::function<double(const Participant&, const Task&)>& gain_of,
                              std::mt19937_64* rng) {
  FormationResult result;
  result.chain = start_chain(req, params.fog, req.arrival_time);
  result.positions = registry_positions(req, plan, pool, params.policy.c1_band, gain_of);
  for (const auto& pos : result.positions) {
    if (pos.options.empty()) {
      fail_chain(result.chain, "no candidate for task '" + pos.task->id.str() + "'");
      return result;
    }
  }
  result.picks = choose_by_value(result.positions, req.description_d, matrix, params.reward, params.epsilon, rng);
  run_pattern(result, req, pool, matrix, book, params, execute);
  return result;
}

FormationResult complex_search(const ServiceRequest& req, const workflow::WorkflowNet& plan,
                               std::span<const Participant> pool, const CapabilityRegistry& registry,
                               ValueMatrix& matrix, RewardBook& book, const FormationParams& params,
                               const Executor& execute,
                               const std::function<double(const Participant&, const Task&)>& gain_of,
                               std::mt19937_64* rng) {
  FormationResult result;
  result.chain = start_chain(req, params.fog, req.arrival_time);
  result.positions = registry_positions(req, plan, pool, params.policy.c1_band, gain_of);

  std::vector<bool> mined(result.positions.size(), false);
  for (std::size_t n = 0; n < result.positions.size(); ++n) {
    auto& pos = result.positions[n];
    if (registry.covers(pos.task->required_capability)) continue;
    mined[n] = true;
    const FeatureSet expected_prev =
        n == 0 ? req.description_d
               : result.positions[n - 1].task->characteristics.united(result.positions[n - 1].task->required_capability);
    const auto next_req = next_requirement(result.positions, n, req.description_d);
    std::vector<MinerReport> reports;
    for (const auto& m : pool) {
      if (!m.is_miner || m.status != ParticipantStatus::active) continue;
      auto found = miner_search(m, *pos.task, pool, expected_prev, next_req, req.description_d, params.reward,
                                params.miner_search, gain_of);
      reports.insert(reports.end(), found.begin(), found.end());
    }
    pos.options = merge_reports(reports);
    if (pos.options.empty()) {
      fail_chain(result.chain, "no miner found capability '" + pos.task->required_capability.to_text() +
                                   "' for task '" + pos.task->id.str() + "'");
      return result;
    }
  }
  for (const auto& pos : result.positions) {
    if (pos.options.empty()) {
      fail_chain(result.chain, "no candidate for task '" + pos.task->id.str() + "'");
      return result;
    }
  }

  const bool any_mined = std::find(mined.begin(), mined.end(), true) != mined.end();
  if (any_mined) {
    // Registered positions follow the simple rule; the fog then fits the
    // miner-found positions around them.
    const auto by_value =
        choose_by_value(result.positions, req.description_d, matrix, params.reward, params.epsilon, rng);
    std::vector<Position> fixed = result.positions;
    for (std::size_t n = 0; n < fixed.size(); ++n) {
      if (!mined[n]) fixed[n].options = {result.positions[n].options[by_value[n]]};
    }
    auto picks = choose_by_similarity(fixed, req.description_d, params.weights, params.reward);
    for (std::size_t n = 0; n < picks.size(); ++n) {
      if (!mined[n]) picks[n] = by_value[n];
    }
    result.picks = std::move(picks);
  } else {
    result.picks = choose_by_similarity(result.positions, req.description_d, params.weights, params.reward);
  }
  run_pattern(result, req, pool, matrix, book, params, execute);
  return result;
}

}  // namespace volchain::chain
