#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "volchain/domain/types.hpp"
#include "volchain/incentive/selection.hpp"

namespace volchain::workflow {

using Marking = std::vector<std::uint32_t>;  // token count per place

struct Transition {
  std::string name;
  std::optional<TaskId> task;  // empty for silent split/join transitions
  std::vector<std::size_t> inputs;
  std::vector<std::size_t> outputs;
};

/// Place/transition net with value semantics. Arcs are stored on the
/// transitions, so the graph is bipartite by construction.
class WorkflowNet {
 public:
  std::size_t add_place(std::string name);
  std::size_t add_transition(std::string name, std::optional<TaskId> task = std::nullopt);
  void add_input(std::size_t place, std::size_t transition);
  void add_output(std::size_t transition, std::size_t place);

  const std::vector<std::string>& places() const noexcept { return places_; }
  const std::vector<Transition>& transitions() const noexcept { return transitions_; }
  std::optional<std::size_t> find_transition(const TaskId& task) const;
  std::optional<std::size_t> find_place(std::string_view name) const;

  const Marking& marking() const noexcept { return marking_; }
  void set_marking(Marking m);

  /// Places without incoming / outgoing arcs.
  std::vector<std::size_t> source_places() const;
  std::vector<std::size_t> sink_places() const;

  /// One token on the unique source place. Throws StateError when the net
  /// does not have exactly one source place.
  Marking initial_marking() const;
  /// One token on the unique sink place.
  Marking final_marking() const;

  bool enabled(std::size_t transition) const { return enabled_in(transition, marking_); }
  bool enabled_in(std::size_t transition, const Marking& m) const;
  /// New net with `transition` fired; throws StateError when disabled.
  WorkflowNet fire(std::size_t transition) const;
  Marking fire_in(std::size_t transition, const Marking& m) const;

  /// Ranked candidate participants per transition.
  std::map<std::size_t, std::vector<ParticipantId>> candidates;

  /// Graphviz DOT rendering: circles for places (with token counts), boxes
  /// for transitions.
  std::string to_dot() const;

 private:
  std::vector<std::string> places_;
  std::vector<Transition> transitions_;
  Marking marking_;
};

/// Builds the plan for `req`: one transition per task, one place per
/// dependency pair, a source and a sink place. Several root tasks are fed
/// by a silent AND-split, several leaf tasks drain into a silent AND-join.
/// Candidates per task transition are the eligible participants ordered by
/// C_n descending, then id. Throws ValidationError on cyclic dependencies.
WorkflowNet build_plan(const ServiceRequest& req, std::span<const Participant> pool, const RewardParams& params,
                       const incentive::SelectionPolicy& policy);

enum class Verdict { sound, unsound, undecided };
std::string_view to_string(Verdict v);

struct SoundnessReport {
  Verdict verdict = Verdict::undecided;
  std::size_t markings_explored = 0;
  std::vector<std::string> structural_issues;  // source/sink count, nodes off every source-sink path
  std::vector<std::string> dead_transitions;   // never enabled in any reachable marking
  std::size_t dead_end_markings = 0;           // reachable markings that cannot reach the final one
  bool proper_completion = true;               // no reachable marking puts a token on the sink with leftovers

  bool sound() const noexcept { return verdict == Verdict::sound; }
};

inline constexpr std::size_t kDefaultMarkingCap = 1'000'000;

/// Exhaustive reachability check from the initial marking. When more than
/// `marking_cap` markings are reachable the verdict is `undecided`.
SoundnessReport check_soundness(const WorkflowNet& net, std::size_t marking_cap = kDefaultMarkingCap);

}  // namespace volchain::workflow
