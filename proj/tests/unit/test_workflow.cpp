#include <doctest.h>

#include <numeric>

#include "gen.hpp"
#include "volchain/domain/errors.hpp"
#include "volchain/workflow/net.hpp"

using namespace volchain;
using workflow::WorkflowNet;

namespace {

Task task(std::string id, std::vector<std::string> deps = {}) {
  Task t;
  t.id = TaskId(std::move(id));
  for (auto& d : deps) t.deps_beta.push_back(TaskId(std::move(d)));
  return t;
}

ServiceRequest request(std::vector<Task> tasks) {
  ServiceRequest r;
  r.id = RequestId("r");
  r.tasks = std::move(tasks);
  return r;
}

WorkflowNet plan(const ServiceRequest& r, std::span<const Participant> pool = {}) {
  return workflow::build_plan(r, pool, RewardParams{}, incentive::SelectionPolicy{});
}

std::uint32_t tokens(const workflow::Marking& m) { return std::accumulate(m.begin(), m.end(), 0u); }

/// Plays the token game with a random enabled transition until none is
/// enabled. Returns the marking it stops in.
workflow::Marking random_play(const WorkflowNet& net, gen::Rng& rng, std::size_t& fired) {
  auto m = net.initial_marking();
  fired = 0;
  while (true) {
    std::vector<std::size_t> on;
    for (std::size_t t = 0; t < net.transitions().size(); ++t) {
      if (net.enabled_in(t, m)) on.push_back(t);
    }
    if (on.empty()) return m;
    m = net.fire_in(on[gen::below(rng, on.size())], m);
    ++fired;
  }
}

}  // namespace

TEST_SUITE("workflow") {
  TEST_CASE("single task is source, transition, sink") {
    const auto net = plan(request({task("a")}));
    CHECK(net.places().size() == 2);
    CHECK(net.transitions().size() == 1);
    CHECK(net.source_places().size() == 1);
    CHECK(net.sink_places().size() == 1);
    CHECK(workflow::check_soundness(net).sound());
  }

  TEST_CASE("linear chain has four places and three transitions") {
    const auto net = plan(request({task("a"), task("b", {"a"}), task("c", {"b"})}));
    CHECK(net.places().size() == 4);
    CHECK(net.transitions().size() == 3);
    CHECK(workflow::check_soundness(net).sound());
  }

  TEST_CASE("firing moves the token and refuses disabled transitions") {
    auto net = plan(request({task("a"), task("b", {"a"})}));
    net.set_marking(net.initial_marking());
    const auto a = *net.find_transition(TaskId("a"));
    const auto b = *net.find_transition(TaskId("b"));
    CHECK_FALSE(net.enabled(b));
    CHECK_THROWS_AS((void)net.fire(b), StateError);
    const auto after = net.fire(a);
    CHECK(after.enabled(b));
    CHECK_FALSE(after.enabled(a));
    CHECK(tokens(after.marking()) == 1);
    CHECK(after.fire(b).marking() == net.final_marking());
    CHECK(net.marking() == net.initial_marking());  // value semantics
  }

  TEST_CASE("diamond enables both branches after the head") {
    auto net = plan(request({task("a"), task("b", {"a"}), task("c", {"a"}), task("d", {"b", "c"})}));
    net.set_marking(net.initial_marking());
    const auto after = net.fire(*net.find_transition(TaskId("a")));
    CHECK(after.enabled(*after.find_transition(TaskId("b"))));
    CHECK(after.enabled(*after.find_transition(TaskId("c"))));
    CHECK_FALSE(after.enabled(*after.find_transition(TaskId("d"))));
    const auto rep = workflow::check_soundness(net);
    CHECK(rep.sound());
    // source, {ab,ac}, {bd,ac}, {ab,cd}, {bd,cd}, sink
    CHECK(rep.markings_explored == 6);
  }

  TEST_CASE("several roots and leaves get silent split and join") {
    const auto net = plan(request({task("a"), task("b"), task("c", {"a"})}));
    std::size_t silent = 0;
    for (const auto& t : net.transitions()) silent += t.task ? 0 : 1;
    CHECK(silent == 2);
    CHECK(workflow::check_soundness(net).sound());
  }

  TEST_CASE("cyclic dependencies are refused") {
    CHECK_THROWS_AS(plan(request({task("a", {"b"}), task("b", {"a"})})), ValidationError);
  }

  TEST_CASE("output place with no way to the sink is unsound") {
    WorkflowNet net;
    const auto i = net.add_place("i"), p = net.add_place("p"), stuck = net.add_place("stuck"), o = net.add_place("o");
    const auto t1 = net.add_transition("t1", TaskId("x")), t2 = net.add_transition("t2", TaskId("y"));
    net.add_input(i, t1);
    net.add_output(t1, p);
    net.add_output(t1, stuck);
    net.add_input(p, t2);
    net.add_output(t2, o);
    const auto rep = workflow::check_soundness(net);
    CHECK_FALSE(rep.sound());
    CHECK(rep.verdict == workflow::Verdict::unsound);
    CHECK_FALSE(rep.structural_issues.empty());
  }

  TEST_CASE("a split without its join leaves tokens behind") {
    WorkflowNet net;
    const auto i = net.add_place("i"), a = net.add_place("a"), b = net.add_place("b"), o = net.add_place("o");
    const auto s = net.add_transition("split"), x = net.add_transition("x", TaskId("x")),
               y = net.add_transition("y", TaskId("y"));
    net.add_input(i, s);
    net.add_output(s, a);
    net.add_output(s, b);
    net.add_input(a, x);
    net.add_output(x, o);
    net.add_input(b, y);
    net.add_output(y, o);
    const auto rep = workflow::check_soundness(net);
    CHECK(rep.verdict == workflow::Verdict::unsound);
    CHECK_FALSE(rep.proper_completion);
  }

  TEST_CASE("a transition that can never fire is reported dead") {
    WorkflowNet net;
    const auto i = net.add_place("i"), a = net.add_place("a"), b = net.add_place("b"), o = net.add_place("o");
    const auto x = net.add_transition("x", TaskId("x")), y = net.add_transition("y", TaskId("y")),
               z = net.add_transition("z", TaskId("z"));
    net.add_input(i, x);
    net.add_output(x, a);
    net.add_input(a, y);
    net.add_output(y, o);
    net.add_input(a, z);  // z also needs b, which nothing ever marks
    net.add_input(b, z);
    net.add_output(z, o);
    const auto rep = workflow::check_soundness(net);
    CHECK(rep.verdict == workflow::Verdict::unsound);
  }

  TEST_CASE("marking cap gives undecided, never a pass") {
    const auto net = plan(request({task("a"), task("b"), task("c"), task("d")}));
    const auto rep = workflow::check_soundness(net, 3);
    CHECK(rep.verdict == workflow::Verdict::undecided);
  }

  TEST_CASE("random plans are sound and every random play ends in the final marking") {
    gen::Rng rng(51);
    for (int i = 0; i < 300; ++i) {
      const auto req = gen::request(rng, 8);
      const auto net = plan(req);
      REQUIRE(workflow::check_soundness(net).sound());
      std::size_t task_transitions = 0;
      for (const auto& t : net.transitions()) task_transitions += t.task ? 1 : 0;
      CHECK(task_transitions == req.tasks.size());
      for (int play = 0; play < 3; ++play) {
        std::size_t fired = 0;
        CHECK(random_play(net, rng, fired) == net.final_marking());
        CHECK(fired == net.transitions().size());
      }
    }
  }

  TEST_CASE("firing a one-in one-out transition keeps the token count") {
    gen::Rng rng(52);
    for (int i = 0; i < 100; ++i) {
      auto net = plan(gen::request(rng, 8));
      auto m = net.initial_marking();
      bool progressed = true;
      while (progressed) {
        progressed = false;
        for (std::size_t t = 0; t < net.transitions().size(); ++t) {
          if (!net.enabled_in(t, m)) continue;
          const auto& tr = net.transitions()[t];
          const auto next = net.fire_in(t, m);
          if (tr.inputs.size() == 1 && tr.outputs.size() == 1) CHECK(tokens(next) == tokens(m));
          CHECK(tokens(next) + tr.inputs.size() == tokens(m) + tr.outputs.size());
          m = next;
          progressed = true;
          break;
        }
      }
    }
  }

  TEST_CASE("candidates are active, capable and ordered by score then id") {
    std::vector<Participant> pool;
    auto add = [&](std::string id, double c, FeatureSet caps, ParticipantStatus st = ParticipantStatus::active) {
      Participant p;
      p.id = ParticipantId(std::move(id));
      p.coop_score_c = c;
      p.capabilities = std::move(caps);
      p.status = st;
      pool.push_back(std::move(p));
    };
    add("d", 0.5, {"cam"});
    add("b", 0.9, {"cam", "gpu"});
    add("a", 0.5, {"cam"});
    add("x", 0.99, {"cam"}, ParticipantStatus::banned);
    add("y", 0.99, {"gpu"});
    auto t = task("t");
    t.required_capability = {"cam"};
    const auto net = plan(request({t}), pool);
    const auto& c = net.candidates.at(*net.find_transition(TaskId("t")));
    CHECK(c == std::vector<ParticipantId>{ParticipantId("b"), ParticipantId("a"), ParticipantId("d")});
  }

  TEST_CASE("dot export names every node") {
    const auto net = plan(request({task("a"), task("b", {"a"})}));
    const auto dot = net.to_dot();
    CHECK(dot.find("digraph") != std::string::npos);
    for (const auto& p : net.places()) CHECK(dot.find(p) != std::string::npos);
  }
}
