#include "volchain/workflow/net.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_map>

#include "volchain/domain/errors.hpp"
#include "volchain/domain/validation.hpp"

namespace volchain::workflow {

std::size_t WorkflowNet::add_place(std::string name) {
  places_.push_back(std::move(name));
  marking_.push_back(0);
  return places_.size() - 1;
}

std::size_t WorkflowNet::add_transition(std::string name, std::optional<TaskId> task) {
  transitions_.push_back({std::move(name), std::move(task), {}, {}});
  return transitions_.size() - 1;
}

void WorkflowNet::add_input(std::size_t place, std::size_t transition) {
  if (place >= places_.size() || transition >= transitions_.size()) throw StateError("arc endpoint out of range");
  transitions_[transition].inputs.push_back(place);
}

void WorkflowNet::add_output(std::size_t transition, std::size_t place) {
  if (place >= places_.size() || transition >= transitions_.size()) throw StateError("arc endpoint out of range");
  transitions_[transition].outputs.push_back(place);
}

std::optional<std::size_t> WorkflowNet::find_transition(const TaskId& task) const {
  for (std::size_t t = 0; t < transitions_.size(); ++t) {
    if (transitions_[t].task == task) return t;
  }
  return std::nullopt;
}

std::optional<std::size_t> WorkflowNet::find_place(std::string_view name) const {
  for (std::size_t p = 0; p < places_.size(); ++p) {
    if (places_[p] == name) return p;
  }
  return std::nullopt;
}

void WorkflowNet::set_marking(Marking m) {
  if (m.size() != places_.size()) throw StateError("marking size does not match place count");
  marking_ = std::move(m);
}

std::vector<std::size_t> WorkflowNet::source_places() const {
  std::vector<bool> fed(places_.size(), false);
  for (const auto& t : transitions_) {
    for (const auto p : t.outputs) fed[p] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < places_.size(); ++p) {
    if (!fed[p]) out.push_back(p);
  }
  return out;
}

std::vector<std::size_t> WorkflowNet::sink_places() const {
  std::vector<bool> drained(places_.size(), false);
  for (const auto& t : transitions_) {
    for (const auto p : t.inputs) drained[p] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < places_.size(); ++p) {
    if (!drained[p]) out.push_back(p);
  }
  return out;
}

Marking WorkflowNet::initial_marking() const {
  const auto sources = source_places();
  if (sources.size() != 1) throw StateError("net has " + std::to_string(sources.size()) + " source places");
  Marking m(places_.size(), 0);
  m[sources.front()] = 1;
  return m;
}

Marking WorkflowNet::final_marking() const {
  const auto sinks = sink_places();
  if (sinks.size() != 1) throw StateError("net has " + std::to_string(sinks.size()) + " sink places");
  Marking m(places_.size(), 0);
  m[sinks.front()] = 1;
  return m;
}

bool WorkflowNet::enabled_in(std::size_t transition, const Marking& m) const {
  if (transition >= transitions_.size()) throw StateError("unknown transition");
  // A place listed twice as input needs two tokens.
  std::map<std::size_t, std::uint32_t> need;
  for (const auto p : transitions_[transition].inputs) ++need[p];
  return std::all_of(need.begin(), need.end(), [&](const auto& kv) { return m[kv.first] >= kv.second; });
}

Marking WorkflowNet::fire_in(std::size_t transition, const Marking& m) const {
  if (!enabled_in(transition, m)) {
    throw StateError("transition '" + transitions_[transition].name + "' is not enabled");
  }
  Marking next = m;
  for (const auto p : transitions_[transition].inputs) --next[p];
  for (const auto p : transitions_[transition].outputs) ++next[p];
  return next;
}

WorkflowNet WorkflowNet::fire(std::size_t transition) const {
  WorkflowNet next = *this;
  next.marking_ = fire_in(transition, marking_);
  return next;
}

std::string WorkflowNet::to_dot() const {
  std::string out = "digraph workflow {\n  rankdir=LR;\n";
  for (std::size_t p = 0; p < places_.size(); ++p) {
    out += "  p" + std::to_string(p) + " [shape=circle,label=\"" + places_[p];
    if (marking_[p] > 0) out += "\\n" + std::string(marking_[p], '*');
    out += "\"];\n";
  }
  for (std::size_t t = 0; t < transitions_.size(); ++t) {
    const auto& tr = transitions_[t];
    out += "  t" + std::to_string(t) + " [shape=box,label=\"" + tr.name + "\"" +
           (tr.task ? "" : ",style=filled,fillcolor=gray") + "];\n";
  }
  for (std::size_t t = 0; t < transitions_.size(); ++t) {
    for (const auto p : transitions_[t].inputs) out += "  p" + std::to_string(p) + " -> t" + std::to_string(t) + ";\n";
    for (const auto p : transitions_[t].outputs) out += "  t" + std::to_string(t) + " -> p" + std::to_string(p) + ";\n";
  }
  out += "}\n";
  return out;
}

WorkflowNet build_plan(const ServiceRequest& req, std::span<const Participant> pool, const RewardParams& params,
                       const incentive::SelectionPolicy& policy) {
  const auto order = topological_order(req);
  WorkflowNet net;
  const auto source = net.add_place("source");

  std::map<TaskId, std::size_t> transition_of;
  for (const auto i : order) {
    transition_of[req.tasks[i].id] = net.add_transition(req.tasks[i].id.str(), req.tasks[i].id);
  }

  std::vector<std::size_t> roots;
  std::map<TaskId, bool> has_successor;
  for (const auto i : order) {
    const auto& task = req.tasks[i];
    const auto t = transition_of.at(task.id);
    std::vector<TaskId> deps = task.deps_beta;
    std::sort(deps.begin(), deps.end());
    deps.erase(std::unique(deps.begin(), deps.end()), deps.end());
    if (deps.empty()) roots.push_back(t);
    for (const auto& dep : deps) {
      const auto place = net.add_place(dep.str() + "->" + task.id.str());
      net.add_output(transition_of.at(dep), place);
      net.add_input(place, t);
      has_successor[dep] = true;
    }
  }
  std::vector<std::size_t> leaves;
  for (const auto i : order) {
    if (!has_successor[req.tasks[i].id]) leaves.push_back(transition_of.at(req.tasks[i].id));
  }

  if (roots.size() == 1) {
    net.add_input(source, roots.front());
  } else {
    const auto split = net.add_transition("split");
    net.add_input(source, split);
    for (const auto t : roots) {
      const auto place = net.add_place("split->" + net.transitions()[t].name);
      net.add_output(split, place);
      net.add_input(place, t);
    }
  }

  const auto sink_name = "sink";
  if (leaves.size() == 1) {
    const auto sink = net.add_place(sink_name);
    net.add_output(leaves.front(), sink);
  } else {
    const auto join = net.add_transition("join");
    for (const auto t : leaves) {
      const auto place = net.add_place(net.transitions()[t].name + "->join");
      net.add_output(t, place);
      net.add_input(place, join);
    }
    const auto sink = net.add_place(sink_name);
    net.add_output(join, sink);
  }

  for (const auto i : order) {
    const auto& task = req.tasks[i];
    auto eligible = incentive::eligible_candidates(task, pool, params, policy);
    std::sort(eligible.begin(), eligible.end(), [](const Participant* a, const Participant* b) {
      if (a->coop_score_c != b->coop_score_c) return a->coop_score_c > b->coop_score_c;
      return a->id < b->id;
    });
    auto& ranked = net.candidates[transition_of.at(task.id)];
    for (const auto* p : eligible) ranked.push_back(p->id);
  }

  net.set_marking(net.initial_marking());
  return net;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::sound: return "sound";
    case Verdict::unsound: return "unsound";
    case Verdict::undecided: return "undecided";
  }
  return "undecided";
}

namespace {

// Structural requirements: one source, one sink, and every node on some
// source-to-sink path.
std::vector<std::string> structural_issues(const WorkflowNet& net) {
  std::vector<std::string> issues;
  const auto sources = net.source_places();
  const auto sinks = net.sink_places();
  if (sources.size() != 1) issues.push_back(std::to_string(sources.size()) + " source places");
  if (sinks.size() != 1) issues.push_back(std::to_string(sinks.size()) + " sink places");
  if (!issues.empty()) return issues;

  // Nodes: places [0, P), transitions [P, P+T).
  const std::size_t np = net.places().size();
  const std::size_t n = np + net.transitions().size();
  std::vector<std::vector<std::size_t>> fwd(n), back(n);
  for (std::size_t t = 0; t < net.transitions().size(); ++t) {
    for (const auto p : net.transitions()[t].inputs) {
      fwd[p].push_back(np + t);
      back[np + t].push_back(p);
    }
    for (const auto p : net.transitions()[t].outputs) {
      fwd[np + t].push_back(p);
      back[p].push_back(np + t);
    }
  }
  const auto reach = [n](std::size_t start, const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (const auto w : adj[v]) {
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
      }
    }
    return seen;
  };
  const auto from_source = reach(sources.front(), fwd);
  const auto to_sink = reach(sinks.front(), back);
  for (std::size_t v = 0; v < n; ++v) {
    if (from_source[v] && to_sink[v]) continue;
    const auto& name = v < np ? net.places()[v] : net.transitions()[v - np].name;
    issues.push_back((v < np ? "place '" : "transition '") + name + "' is not on a source-sink path");
  }
  return issues;
}

struct MarkingHash {
  std::size_t operator()(const Marking& m) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (const auto v : m) h = (h ^ v) * 1099511628211ull;
    return h;
  }
};

}  // namespace

SoundnessReport check_soundness(const WorkflowNet& net, std::size_t marking_cap) {
  SoundnessReport report;
  report.structural_issues = structural_issues(net);
  if (net.source_places().size() != 1 || net.sink_places().size() != 1) {
    report.verdict = Verdict::unsound;
    return report;
  }

  const auto initial = net.initial_marking();
  const auto final_marking = net.final_marking();
  const auto sink = net.sink_places().front();
  const std::size_t tcount = net.transitions().size();

  std::unordered_map<Marking, std::size_t, MarkingHash> index;
  std::vector<Marking> states;
  std::vector<std::vector<std::size_t>> predecessors;
  std::vector<bool> fired(tcount, false);
  std::deque<std::size_t> queue;

  index.emplace(initial, 0);
  states.push_back(initial);
  predecessors.emplace_back();
  queue.push_back(0);
  while (!queue.empty()) {
    const auto s = queue.front();
    queue.pop_front();
    const Marking current = states[s];
    if (current[sink] > 0 && current != final_marking) report.proper_completion = false;
    for (std::size_t t = 0; t < tcount; ++t) {
      if (!net.enabled_in(t, current)) continue;
      fired[t] = true;
      auto next = net.fire_in(t, current);
      auto [it, inserted] = index.emplace(std::move(next), states.size());
      if (inserted) {
        if (states.size() >= marking_cap) {
          report.markings_explored = states.size();
          report.verdict = Verdict::undecided;
          return report;
        }
        states.push_back(it->first);
        predecessors.emplace_back();
        queue.push_back(it->second);
      }
      predecessors[it->second].push_back(s);
    }
  }
  report.markings_explored = states.size();

  for (std::size_t t = 0; t < tcount; ++t) {
    if (!fired[t]) report.dead_transitions.push_back(net.transitions()[t].name);
  }

  std::vector<bool> can_finish(states.size(), false);
  const auto f = index.find(final_marking);
  if (f != index.end()) {
    std::vector<std::size_t> stack{f->second};
    can_finish[f->second] = true;
    while (!stack.empty()) {
      const auto s = stack.back();
      stack.pop_back();
      for (const auto p : predecessors[s]) {
        if (!can_finish[p]) {
          can_finish[p] = true;
          stack.push_back(p);
        }
      }
    }
  }
  report.dead_end_markings = static_cast<std::size_t>(std::count(can_finish.begin(), can_finish.end(), false));

  const bool ok = report.structural_issues.empty() && report.dead_transitions.empty() && report.dead_end_markings == 0 && report.proper_completion;
  report.verdict = ok ? Verdict::sound : Verdict::unsound;
  return report;
}

}  // namespace volchain::workflow
