#include <doctest.h>

#include "oracles.hpp"
#include "volchain/domain/errors.hpp"
#include "volchain/incentive/gain.hpp"
#include "volchain/incentive/selection.hpp"

using namespace volchain;
using incentive::TaskExecution;

namespace {

TaskExecution done(double q, QoSSpec band, double deadline, double finish) {
  TaskExecution t;
  t.deadline = deadline;
  t.qos = band;
  t.outcome.completed = true;
  t.outcome.achieved_q = q;
  t.outcome.completion_time = finish;
  return t;
}

Participant member(const std::string& id, double c) {
  Participant p;
  p.id = ParticipantId(id);
  p.capabilities = {"cam"};
  p.coop_score_c = c;
  return p;
}

ServiceRequest one_task() {
  ServiceRequest r;
  r.id = RequestId("r");
  Task t;
  t.id = TaskId("t0");
  t.required_capability = {"cam"};
  r.tasks.push_back(t);
  return r;
}

incentive::GainEstimator flat(double g) {
  return [g](const Participant&, const Task&, const incentive::Assignment&) { return g; };
}

}  // namespace

TEST_SUITE("incentive") {
  TEST_CASE("in-band quality and early finish earn 2.3") {
    const auto t = done(0.8, {0.5, 1.0}, 10.0, 7.0);
    RewardParams p;
    p.tau_q = 1.0;
    p.tau_gamma = 0.5;
    CHECK(incentive::compute_reward({&t, 1}, p) == doctest::Approx(0.8 + 0.5 * 3.0).epsilon(1e-15));
    CHECK(incentive::compute_reward({&t, 1}, p) == doctest::Approx(oracle::gain_terms(t, p).reward));
  }

  TEST_CASE("workload sums the normalized cycle and energy usage") {
    TaskExecution a, b;
    a.outcome = {.workload_delta = 0.4, .energy_used = 0.1};
    b.outcome = {.workload_delta = 0.2, .energy_used = 0.05};
    const TaskExecution both[] = {a, b};
    CHECK(incentive::compute_workload(both) == doctest::Approx(0.75).epsilon(1e-15));
  }

  TEST_CASE("penalties for low quality and lateness") {
    RewardParams p;
    p.sigma_q = 1.0;
    p.sigma_gamma = 0.5;
    const auto low = done(0.3, {0.5, 1.0}, 10.0, 5.0);
    CHECK(incentive::compute_penalty({&low, 1}, p) == doctest::Approx(0.3));
    const auto late = done(0.8, {0.5, 1.0}, 10.0, 12.0);
    CHECK(incentive::compute_penalty({&late, 1}, p) == doctest::Approx(1.0));
  }

  TEST_CASE("uncompleted task pays the floor and its lateness at abandonment") {
    RewardParams p;
    TaskExecution t;
    t.deadline = 4.0;
    t.qos = {0.6, 0.9};
    t.outcome.completed = false;
    t.outcome.completion_time = 6.0;
    CHECK(incentive::compute_reward({&t, 1}, p) == 0.0);
    CHECK(incentive::compute_penalty({&t, 1}, p) == doctest::Approx(p.sigma_q * 0.6 + p.sigma_gamma * 2.0));
  }

  TEST_CASE("gain composes reward 2.3, workload 0.5 and no penalty into 1.8") {
    auto t = done(0.8, {0.5, 1.0}, 10.0, 7.0);
    t.outcome.workload_delta = 0.3;
    t.outcome.energy_used = 0.2;
    const auto g = incentive::compute_gain(t, RewardParams{});
    CHECK(g.reward_r == doctest::Approx(2.3));
    CHECK(g.workload_w == doctest::Approx(0.5));
    CHECK(g.penalty_p == 0.0);
    CHECK(g.gain_g == doctest::Approx(1.8));
  }

  TEST_CASE("gain may be negative") {
    auto t = done(0.1, {0.5, 1.0}, 1.0, 9.0);
    t.outcome.workload_delta = 1.0;
    CHECK(incentive::compute_gain(t, RewardParams{}).gain_g < 0.0);
  }

  TEST_CASE("random draws match the case table and the identity holds exactly") {
    gen::Rng rng(31);
    for (int i = 0; i < 20000; ++i) {
      const auto t = oracle::random_execution(rng);
      const auto p = gen::params(rng);
      const auto g = incentive::compute_gain(t, p);
      const auto o = oracle::gain_terms(t, p);
      REQUIRE(g.gain_g == g.reward_r - g.workload_w - g.penalty_p);
      CHECK(g.reward_r == o.reward);
      CHECK(g.workload_w == o.workload);
      CHECK(g.penalty_p == o.penalty);
      CHECK(o.quality_in_reward != o.quality_in_penalty);
    }
  }

  TEST_CASE("quality on a band edge is rewarded, never penalized") {
    RewardParams p;
    for (double q : {0.5, 0.9}) {
      const auto t = done(q, {0.5, 0.9}, 10.0, 10.0);
      CHECK(incentive::compute_reward({&t, 1}, p) == doctest::Approx(q));
      CHECK(incentive::compute_penalty({&t, 1}, p) == 0.0);
    }
  }

  TEST_CASE("finishing earlier never lowers the reward") {
    gen::Rng rng(32);
    for (int i = 0; i < 5000; ++i) {
      auto t = oracle::random_execution(rng);
      t.outcome.completed = true;
      const auto p = gen::params(rng);
      t.outcome.completion_time = gen::uniform(rng, 0.0, t.deadline);
      const double later = incentive::compute_reward({&t, 1}, p);
      t.outcome.completion_time = gen::uniform(rng, 0.0, t.outcome.completion_time);
      CHECK(incentive::compute_reward({&t, 1}, p) >= later);
    }
  }

  TEST_CASE("miner share splits 10 credits into 3 and 7") {
    RewardParams p;
    p.phi = 0.3;
    const auto s = incentive::miner_reward(Credits::from_units(10.0), p);
    CHECK(s.miner == Credits::from_units(3.0));
    CHECK(s.participant == Credits::from_units(7.0));
    p.phi = 0.0;
    CHECK(incentive::miner_reward(Credits::from_units(10.0), p).miner == Credits{});
    p.phi = 1.0;
    CHECK(incentive::miner_reward(Credits::from_units(10.0), p).participant == Credits{});
  }

  TEST_CASE("shares add back to the reward for every amount and share") {
    gen::Rng rng(33);
    RewardParams p;
    for (int i = 0; i < 20000; ++i) {
      p.phi = gen::uniform(rng, 0.0, 1.0);
      const auto r = Credits::from_micros(static_cast<std::int64_t>(gen::below(rng, 1'000'000'000)));
      const auto s = incentive::miner_reward(r, p);
      CHECK(s.miner + s.participant == r);
      CHECK(s.miner.micros() >= 0);
      CHECK(s.participant.micros() >= 0);
      // Half-away rounding of phi * micros.
      CHECK(std::abs(static_cast<double>(s.miner.micros()) - p.phi * static_cast<double>(r.micros())) <= 0.5 + 1e-6);
    }
  }

  TEST_CASE("negative reward or share outside [0,1] is refused") {
    RewardParams p;
    CHECK_THROWS_AS((void)incentive::miner_reward(Credits::from_micros(-1), p), ParameterError);
    p.phi = 1.5;
    CHECK_THROWS_AS((void)incentive::miner_reward(Credits::from_units(1.0), p), ParameterError);
  }

  TEST_CASE("single capable participant is chosen") {
    const Participant pool[] = {member("a", 0.5)};
    const auto a = incentive::select_participants(one_task(), pool, {}, {}, flat(1.0));
    CHECK(a.chosen.at(TaskId("t0")) == ParticipantId("a"));
    CHECK_FALSE(a.partial());
  }

  TEST_CASE("higher cooperation score wins at equal gain") {
    const Participant pool[] = {member("a", 0.4), member("b", 0.9)};
    const auto a = incentive::select_participants(one_task(), pool, {}, {}, flat(1.0));
    CHECK(a.chosen.at(TaskId("t0")) == ParticipantId("b"));
  }

  TEST_CASE("inside the band, gain then id decide") {
    const Participant pool[] = {member("b", 0.9), member("a", 0.88), member("c", 0.9)};
    CHECK(incentive::select_participants(one_task(), pool, {}, {}, flat(1.0)).chosen.at(TaskId("t0")) ==
          ParticipantId("a"));
    const auto prefer_c = [](const Participant& p, const Task&, const incentive::Assignment&) {
      return p.id == ParticipantId("c") ? 2.0 : 1.0;
    };
    CHECK(incentive::select_participants(one_task(), pool, {}, {}, prefer_c).chosen.at(TaskId("t0")) ==
          ParticipantId("c"));
  }

  TEST_CASE("banned and incapable participants leave the task unassigned") {
    auto banned = member("a", 0.9);
    banned.status = ParticipantStatus::banned;
    auto blind = member("b", 0.9);
    blind.capabilities = {"mic"};
    const Participant pool[] = {banned, blind};
    const auto a = incentive::select_participants(one_task(), pool, {}, {}, flat(1.0));
    CHECK(a.partial());
    CHECK(a.unassigned == std::vector<TaskId>{TaskId("t0")});
  }

  TEST_CASE("four participants by two tasks matches exhaustive search") {
    gen::Rng rng(34);
    int checked = 0;
    while (checked < 200) {
      auto in = oracle::make_p1_instance(rng);
      in.pool.resize(std::min<std::size_t>(in.pool.size(), 4));
      in.req.tasks.resize(std::min<std::size_t>(in.req.tasks.size(), 2));
      if (in.req.tasks.size() == 2) {
        in.req.tasks[1].deps_beta.clear();
      }
      const auto bf = oracle::brute_force(in);
      const auto exact = incentive::select_participants_exact(in.req, in.pool, in.params, in.policy, oracle::estimator(in));
      CHECK(exact.total_gain == doctest::Approx(bf.best_total).epsilon(1e-12));
      ++checked;
    }
  }

  TEST_CASE("greedy selection against brute force on small instances") {
    gen::Rng rng(35);
    int feasible = 0, close = 0;
    const int n = 300;
    for (int i = 0; i < n; ++i) {
      const auto r = oracle::p1_trial(rng);
      feasible += r.feasible_equal ? 1 : 0;
      close += r.within_5pct ? 1 : 0;
    }
    CHECK(feasible == n);
    CHECK(close >= n * 95 / 100);
  }
}
