#include "volchain/incentive/selection.hpp"

#include <algorithm>
#include <limits>

#include "volchain/domain/validation.hpp"
#include "volchain/similarity/similarity.hpp"

namespace volchain::incentive {

std::vector<const Participant*> eligible_candidates(const Task& task, std::span<const Participant> pool,
                                                    const RewardParams& params, const SelectionPolicy& policy) {
  std::vector<const Participant*> out;
  for (const auto& p : pool) {
    if (p.status != ParticipantStatus::active) continue;
    if (!similarity::capability_match(p, task)) continue;
    if (!similarity::task_preference_match(p, task, params, policy.preference_threshold)) continue;
    out.push_back(&p);
  }
  return out;
}

std::vector<const Participant*> cooperation_qualified(const Task& task, std::span<const Participant> pool,
                                                      const RewardParams& params, const SelectionPolicy& policy) {
  auto eligible = eligible_candidates(task, pool, params, policy);
  if (eligible.empty()) return eligible;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto* p : eligible) best = std::max(best, p->coop_score_c);
  std::erase_if(eligible, [&](const Participant* p) { return p->coop_score_c < best - policy.c1_band; });
  std::sort(eligible.begin(), eligible.end(), [](const Participant* a, const Participant* b) { return a->id < b->id; });
  return eligible;
}

Assignment select_participants(const ServiceRequest& req, std::span<const Participant> pool,
                               const RewardParams& params, const SelectionPolicy& policy,
                               const GainEstimator& estimate) {
  Assignment result;
  for (const auto i : topological_order(req)) {
    const auto& task = req.tasks[i];
    const auto qualified = cooperation_qualified(task, pool, params, policy);
    if (qualified.empty()) {
      result.unassigned.push_back(task.id);
      continue;
    }
    const Participant* best = nullptr;
    double best_gain = 0.0;
    for (const auto* p : qualified) {  // ascending id, so strict > keeps the smallest id on ties
      const double g = estimate(*p, task, result);
      if (best == nullptr || g > best_gain) {
        best = p;
        best_gain = g;
      }
    }
    result.chosen.emplace(task.id, best->id);
    result.total_gain += best_gain;
  }
  return result;
}

namespace {

struct ExactSearch {
  const ServiceRequest& req;
  const GainEstimator& estimate;
  std::vector<std::size_t> order;
  std::vector<std::vector<const Participant*>> options;
  Assignment current;
  Assignment best;
  bool found = false;

  void run(std::size_t depth) {
    if (depth == order.size()) {
      if (!found || current.total_gain > best.total_gain) {
        best = current;
        found = true;
      }
      return;
    }
    const auto& task = req.tasks[order[depth]];
    if (options[depth].empty()) {
      current.unassigned.push_back(task.id);
      run(depth + 1);
      current.unassigned.pop_back();
      return;
    }
    for (const auto* p : options[depth]) {
      const double g = estimate(*p, task, current);
      const double saved_total = current.total_gain;
      current.chosen.emplace(task.id, p->id);
      current.total_gain += g;
      run(depth + 1);
      current.total_gain = saved_total;
      current.chosen.erase(task.id);
    }
  }
};

}  // namespace

Assignment select_participants_exact(const ServiceRequest& req, std::span<const Participant> pool,
                                     const RewardParams& params, const SelectionPolicy& policy,
                                     const GainEstimator& estimate) {
  ExactSearch search{req, estimate, topological_order(req), {}, {}, {}, false};
  for (const auto i : search.order) {
    search.options.push_back(cooperation_qualified(req.tasks[i], pool, params, policy));
  }
  search.run(0);
  return search.best;
}

}  // namespace volchain::incentive
