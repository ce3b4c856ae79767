#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "volchain/chain/block.hpp"
#include "volchain/chain/chain_io.hpp"
#include "volchain/chain/formation.hpp"
#include "volchain/chain/sha256.hpp"
#include "volchain/chain/value_matrix.hpp"
#include "volchain/domain/errors.hpp"
#include "volchain/workflow/net.hpp"

using namespace volchain;
using namespace volchain::chain;

namespace {

Participant node(std::string id, FeatureSet caps, double c = 0.8) {
  Participant p;
  p.id = ParticipantId(std::move(id));
  p.capabilities = std::move(caps);
  p.coop_score_c = c;
  return p;
}

ServiceRequest single(FeatureSet cap) {
  ServiceRequest r;
  r.id = RequestId("r1");
  r.requester = ParticipantId("asker");
  r.description_d = {"video"};
  r.qos_q = {0.5, 1.0};
  Task t;
  t.id = TaskId("t0");
  t.required_capability = std::move(cap);
  t.characteristics = {"video"};
  t.deadline_gamma = 10.0;
  r.tasks.push_back(t);
  return r;
}

ActualOutcome good(const Participant&, const Task&) {
  ActualOutcome o;
  o.completed = true;
  o.achieved_q = 0.9;
  o.completion_time = 4.0;
  o.workload_delta = 0.2;
  o.energy_used = 0.1;
  return o;
}

double unit_gain(const Participant&, const Task&) { return 1.0; }

workflow::WorkflowNet plan_for(const ServiceRequest& r, std::span<const Participant> pool) {
  return workflow::build_plan(r, pool, RewardParams{}, incentive::SelectionPolicy{});
}

}  // namespace

TEST_SUITE("chain") {
  TEST_CASE("sha256 reference vectors") {
    CHECK(to_hex(sha256("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(to_hex(sha256("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(digest_from_hex(to_hex(sha256("abc"))) == sha256("abc"));
    CHECK_FALSE(digest_from_hex("ABC").has_value());
  }

  TEST_CASE("append links blocks and verifies") {
    gen::Rng rng(61);
    auto c = start_chain(gen::request(rng, 4), ParticipantId("fog"), 0.0);
    CHECK(verify_chain(c));  // genesis only
    for (int i = 0; i < 5; ++i) {
      BlockFields f;
      f.task = TaskId(gen::tag("t", i));
      f.participant = ParticipantId("p");
      append_block(c, f);
      CHECK(c.blocks.back().prev_hash == c.blocks[c.blocks.size() - 2].hash);
    }
    CHECK(c.blocks.size() == 6);
    CHECK(c.genesis().prev_hash == kZeroDigest);
    CHECK(verify_chain(c));
    complete_chain(c);
    CHECK_THROWS_AS(append_block(c, BlockFields{}), StateError);
  }

  TEST_CASE("edited output features break the chain at that block") {
    gen::Rng rng(62);
    auto c = oracle::random_chain(rng, 5);
    while (c.blocks.size() < 4) c = oracle::random_chain(rng, 5);
    CHECK(verify_chain(c));
    c.blocks[2].output_features = c.blocks[2].output_features.united(FeatureSet{"forged"});
    CHECK_FALSE(verify_chain(c));
    CHECK(first_broken_block(c) == 2u);
  }

  TEST_CASE("relinking a rewritten block is caught at the successor") {
    gen::Rng rng(63);
    auto c = oracle::random_chain(rng, 5);
    while (c.blocks.size() < 4) c = oracle::random_chain(rng, 5);
    c.blocks[1].reward_paid = Credits::from_units(1000.0);
    c.blocks[1].hash = compute_hash(c.blocks[1]);
    CHECK(first_broken_block(c) == 2u);
  }

  TEST_CASE("export round-trips and single bit flips are always detected") {
    gen::Rng rng(64);
    for (int i = 0; i < 40; ++i) {
      const auto c = oracle::random_chain(rng);
      const auto text = export_chain(c);
      REQUIRE(verify_chain_text(text).ok());
      CHECK(import_chain(text) == c);
      for (int f = 0; f < 50; ++f) {
        auto bad = text;
        bad[gen::below(rng, bad.size())] ^= static_cast<char>(1u << gen::below(rng, 8));
        CHECK_FALSE(verify_chain_text(bad).ok());
      }
    }
  }

  TEST_CASE("text that is not a chain is malformed") {
    CHECK(verify_chain_text("hello").result == ChainCheck::Result::malformed);
    CHECK(verify_chain_text("").result == ChainCheck::Result::malformed);
    CHECK_THROWS_AS(import_chain("hello"), ValidationError);
  }

  TEST_CASE("chain reward examples") {
    ValueMatrix m;
    CHECK(chain_reward({}, m) == 0.0);
    const PatternStep fresh[] = {{"s", ParticipantId("a"), 1.0}};
    CHECK(chain_reward(fresh, m) == 1.0);
    // Two candidates, each best in half of its trials with mean similarity 0.8.
    for (const auto* slot : {"x", "y"}) {
      m.record_similarity(slot, ParticipantId("a"), 0.9);
      m.record_similarity(slot, ParticipantId("a"), 0.7);
    }
    const PatternStep two[] = {{"x", ParticipantId("a"), 0.0}, {"y", ParticipantId("a"), 0.0}};
    CHECK(chain_reward(two, m) == doctest::Approx(2 * 0.5 * 0.8));
  }

  TEST_CASE("value update examples") {
    const ParticipantId a("a");
    ValueMatrix m(0.1);
    m.update_value("s", a, 0.5);  // 0 -> 0.05
    CHECK(m.find("s", a)->value == doctest::Approx(0.05));
    ValueMatrix seeded(1.0);
    seeded.update_value("s", a, 0.5);
    const double v0 = seeded.find("s", a)->value;
    CHECK(v0 == 0.5);
    CHECK(v0 + 0.1 * (1.0 - v0) == doctest::Approx(0.55));
    ValueMatrix frozen(0.0);
    frozen.update_value("s", a, 0.9);
    CHECK(frozen.find("s", a)->value == 0.0);
    ValueMatrix jump(1.0);
    jump.update_value("s", a, 0.9);
    CHECK(jump.find("s", a)->value == 0.9);
    CHECK_THROWS_AS(ValueMatrix(1.5), ParameterError);
  }

  TEST_CASE("value converges geometrically toward a fixed target") {
    for (double rho : {0.0, 0.1, 0.5, 1.0}) {
      ValueMatrix m(rho);
      const double target = 0.8;
      m.update_value("s", ParticipantId("a"), 0.3);  // V(0)
      const double v0 = m.find("s", ParticipantId("a"))->value;
      for (int t = 1; t <= 60; ++t) {
        m.update_value("s", ParticipantId("a"), target);
        const double v = m.find("s", ParticipantId("a"))->value;
        CHECK(std::abs(std::abs(v - target) - std::pow(1.0 - rho, t) * std::abs(v0 - target)) <= 1e-12);
      }
    }
  }

  TEST_CASE("value choice equals the best of all eight patterns") {
    gen::Rng rng(65);
    for (int trial = 0; trial < 200; ++trial) {
      ValueMatrix m;
      std::vector<chain::Position> positions(3);
      std::vector<Task> tasks(3);
      for (int n = 0; n < 3; ++n) {
        tasks[n].id = TaskId(gen::tag("t", n));
        positions[n].task = &tasks[n];
        positions[n].slot = gen::tag("slot", n);
        for (const char* id : {"a", "b"}) {
          CandidateOption o;
          o.participant = ParticipantId(id);
          positions[n].options.push_back(o);
          for (std::size_t k = 0; k < 1 + gen::below(rng, 4); ++k) {
            m.record_similarity(positions[n].slot, o.participant, gen::grid(rng, 0.0, 1.0, 0.1));
          }
        }
      }
      const auto picks = choose_by_value(positions, {}, m, {}, 0.0, nullptr);
      double best = -1.0;
      std::vector<std::size_t> arg;
      for (std::size_t mask = 0; mask < 8; ++mask) {
        std::vector<PatternStep> pat;
        std::vector<std::size_t> p;
        double by_hand = 0.0;
        for (std::size_t n = 0; n < 3; ++n) {
          p.push_back((mask >> n) & 1u);
          const auto& who = positions[n].options[p.back()].participant;
          pat.push_back({positions[n].slot, who, 0.0});
          const auto* e = m.find(positions[n].slot, who);
          by_hand += static_cast<double>(e->best_hits) / e->trials * (e->sim_sum / e->trials);
        }
        const double rw = chain_reward(pat, m);
        CHECK(rw == doctest::Approx(by_hand).epsilon(1e-12));
        if (rw > best + 1e-12) {
          best = rw;
          arg = p;
        }
      }
      std::vector<PatternStep> chosen;
      for (std::size_t n = 0; n < 3; ++n) chosen.push_back({positions[n].slot, positions[n].options[picks[n]].participant, 0.0});
      CHECK(chain_reward(chosen, m) == doctest::Approx(best).epsilon(1e-12));
    }
  }

  TEST_CASE("similarity choice equals exhaustive enumeration of the objective") {
    gen::Rng rng(66);
    const SimilarityWeights w;
    for (int trial = 0; trial < 200; ++trial) {
      const auto description = gen::features(rng, "f", 6);
      std::vector<Task> tasks(2 + gen::below(rng, 2));
      std::vector<chain::Position> positions(tasks.size());
      for (std::size_t n = 0; n < tasks.size(); ++n) {
        tasks[n].id = TaskId(gen::tag("t", n));
        tasks[n].characteristics = gen::features(rng, "f", 6);
        tasks[n].required_capability = {gen::tag("c", n)};
        positions[n].task = &tasks[n];
        const std::size_t k = 1 + gen::below(rng, 3);
        for (std::size_t i = 0; i < k; ++i) {
          CandidateOption o;
          o.participant = ParticipantId(gen::tag("p", i));
          o.input = gen::features(rng, "f", 6);
          o.output = o.input.united(tasks[n].required_capability);
          positions[n].options.push_back(o);
        }
      }
      // Objective recomputed by hand from the pairwise similarity oracle.
      auto by_hand = [&](const std::vector<std::size_t>& p) {
        double s = 0.0;
        FeatureSet prev = description;
        for (std::size_t n = 0; n < positions.size(); ++n) {
          const auto& o = positions[n].options[p[n]];
          const FeatureSet next = n + 1 < positions.size()
                                      ? tasks[n + 1].characteristics.united(tasks[n + 1].required_capability)
                                      : description;
          s += w.block * oracle::comp_char(prev, o.input) + w.next * oracle::comp_char(o.output, next) +
               w.request * oracle::comp_char(o.output, description);
          prev = o.output;
        }
        return s;
      };
      double best = -1.0;
      std::vector<std::size_t> idx(positions.size(), 0);
      while (true) {
        const double v = by_hand(idx);
        CHECK(formation_objective(positions, idx, description, w, {}) == doctest::Approx(v).epsilon(1e-12));
        best = std::max(best, v);
        std::size_t n = 0;
        for (; n < idx.size(); ++n) {
          if (++idx[n] < positions[n].options.size()) break;
          idx[n] = 0;
        }
        if (n == idx.size()) break;
      }
      const auto picks = choose_by_similarity(positions, description, w, {});
      CHECK(by_hand(picks) == doctest::Approx(best).epsilon(1e-12));
    }
  }

  TEST_CASE("classification") {
    auto r = single({"cam"});
    const Participant pool[] = {node("a", {"cam"})};
    const auto reg = build_registry(pool);
    ClassifyParams cp;
    CHECK(classify_request(r, reg, cp) == SearchKind::simple);
    CHECK(classify_request(single({"lidar"}), reg, cp) == SearchKind::complex);
    r.qos_q.floor = 0.95;
    r.tasks[0].deadline_gamma = 60.0;
    CHECK(classify_request(r, reg, cp) == SearchKind::complex);
    r.tasks[0].deadline_gamma = 1.0;
    CHECK(classify_request(r, reg, cp) == SearchKind::simple);
  }

  TEST_CASE("unregistered devices do not advertise") {
    auto hidden = node("h", {"lidar"});
    hidden.registered = false;
    const Participant pool[] = {node("a", {"cam"}), hidden};
    const auto reg = build_registry(pool);
    CHECK(reg.size() == 1);
    CHECK(reg.covers({"cam"}));
    CHECK_FALSE(reg.covers({"lidar"}));
  }

  TEST_CASE("quorum and attestation") {
    for (std::size_t k = 1; k <= 9; ++k) CHECK(quorum(k) == static_cast<std::size_t>(std::ceil((k + 1) / 2.0)));
    gen::Rng rng(67);
    auto c = oracle::random_chain(rng, 3);
    auto& b = c.blocks.back();
    const std::string committee[] = {"p2", "p1", "p3"};
    b.sensitive = false;
    b.hash = compute_hash(b);
    CHECK(attest_block(b, committee, "fog"));
    CHECK(b.attestations.size() == 3);
    for (const auto& a : b.attestations) CHECK(attestation_valid(a, b.hash));
    b.sensitive = true;
    b.hash = compute_hash(b);
    CHECK(attest_block(b, committee, "fog"));
    REQUIRE(b.attestations.size() == 1);
    CHECK(b.attestations[0].attester == "fog");
    b.attestations[0].signature[0] ^= 1;
    CHECK_FALSE(verify_chain(c));
  }

  TEST_CASE("miner-found block splits 10 into 3 and 7, once") {
    gen::Rng rng(68);
    auto req = gen::request(rng, 1);
    auto c = start_chain(req, ParticipantId("fog"), 0.0);
    BlockFields f;
    f.task = req.tasks[0].id;
    f.participant = ParticipantId("p");
    f.miner = ParticipantId("m");
    f.reward_paid = Credits::from_units(10.0);
    append_block(c, f);
    RewardBook book;
    CHECK_THROWS_AS(book.distribute(c, {}), StateError);
    complete_chain(c);
    const auto d = book.distribute(c, {});
    CHECK(d.applied);
    CHECK(book.balance(ParticipantId("m")) == Credits::from_units(3.0));
    CHECK(book.balance(ParticipantId("p")) == Credits::from_units(7.0));
    CHECK_FALSE(book.distribute(c, {}).applied);
    CHECK(book.postings().size() == 2);
  }

  TEST_CASE("postings add up to the block rewards on every chain") {
    gen::Rng rng(69);
    RewardBook book;
    RewardParams p;
    for (int i = 0; i < 200; ++i) {
      const auto c = oracle::random_chain(rng);
      p.phi = gen::uniform(rng, 0.0, 1.0);
      const auto d = book.distribute(c, p);
      Credits posted, paid;
      for (const auto& x : d.postings) posted += x.amount;
      for (std::size_t k = 1; k < c.blocks.size(); ++k) paid += c.blocks[k].reward_paid;
      CHECK(posted == paid);
    }
    // Without miner-found blocks the miners get nothing.
    gen::Rng plain(70);
    RewardBook b2;
    for (int i = 0; i < 20; ++i) {
      auto c = oracle::random_chain(plain);
      for (auto& blk : c.blocks) blk.miner.reset();
      b2.distribute(c, p);
    }
    CHECK(b2.total(PostingRole::miner) == Credits{});
  }

  TEST_CASE("block credit is reward minus penalty, never negative") {
    Task t;
    t.deadline_gamma = 10.0;
    ActualOutcome o;
    o.completed = true;
    o.achieved_q = 0.8;
    o.completion_time = 7.0;
    CHECK(block_reward_credits(t, {0.5, 1.0}, o, {}) == Credits::from_units(2.3));
    o.completion_time = 30.0;
    o.achieved_q = 0.1;
    CHECK(block_reward_credits(t, {0.5, 1.0}, o, {}) == Credits{});
  }

  TEST_CASE("rank score mixes quality and timeliness") {
    Task t;
    t.deadline_gamma = 10.0;
    ActualOutcome o{.achieved_q = 0.5, .completion_time = 20.0, .completed = true};
    CHECK(rank_score(t, o) == doctest::Approx(0.6 * 0.5 + 0.4 * 0.5));
    o.completion_time = 5.0;
    CHECK(rank_score(t, o) == doctest::Approx(0.7));
    o.completed = false;
    CHECK(rank_score(t, o) == 0.0);
  }

  TEST_CASE("simple search with one capable participant forms a two-block chain") {
    const auto req = single({"cam"});
    const Participant pool[] = {node("a", {"cam"})};
    ValueMatrix m;
    RewardBook book;
    FormationParams fp;
    const auto res = simple_search(req, plan_for(req, pool), pool, m, book, fp, good, unit_gain, nullptr);
    CHECK(res.chain.status == ChainStatus::complete);
    CHECK(res.chain.blocks.size() == 2);
    CHECK(res.chain.blocks[1].participant == ParticipantId("a"));
    CHECK(verify_chain(res.chain));
    CHECK(res.rewards.applied);
    CHECK(book.balance(ParticipantId("a")) == res.chain.blocks[1].reward_paid);
    CHECK(m.find(slot_key(req.tasks[0]), ParticipantId("a"))->trials == 1);
  }

  TEST_CASE("simple search follows the learned values") {
    const auto req = single({"cam"});
    const Participant pool[] = {node("a", {"cam"}), node("b", {"cam"})};
    ValueMatrix m(1.0);
    const auto slot = slot_key(req.tasks[0]);
    m.update_value(slot, ParticipantId("a"), 0.2);
    m.update_value(slot, ParticipantId("b"), 0.9);
    RewardBook book;
    const auto res = simple_search(req, plan_for(req, pool), pool, m, book, FormationParams{}, good, unit_gain, nullptr);
    CHECK(res.chain.blocks[1].participant == ParticipantId("b"));
  }

  TEST_CASE("simple search fails without a candidate and keeps the genesis") {
    const auto req = single({"lidar"});
    const Participant pool[] = {node("a", {"cam"})};
    ValueMatrix m;
    RewardBook book;
    const auto res = simple_search(req, plan_for(req, pool), pool, m, book, FormationParams{}, good, unit_gain, nullptr);
    CHECK(res.chain.status == ChainStatus::failed);
    CHECK(res.chain.blocks.size() == 1);
    CHECK(verify_chain(res.chain));
  }

  TEST_CASE("complex search finds the hidden holder through a miner") {
    const auto req = single({"lidar"});
    auto hidden = node("h", {"lidar"});
    hidden.registered = false;
    hidden.position = {100.0, 0.0};
    auto miner = node("m", {"cam"}, 0.95);
    miner.is_miner = true;
    const Participant pool[] = {node("a", {"cam"}), hidden, miner};
    const auto reg = build_registry(pool);
    ValueMatrix m;
    RewardBook book;
    FormationParams fp;
    const auto res = complex_search(req, plan_for(req, pool), pool, reg, m, book, fp, good, unit_gain, nullptr);
    REQUIRE(res.chain.status == ChainStatus::complete);
    CHECK(res.chain.blocks[1].participant == ParticipantId("h"));
    CHECK(res.chain.blocks[1].miner == ParticipantId("m"));
    const auto paid = res.chain.blocks[1].reward_paid;
    const auto share = incentive::miner_reward(paid, fp.reward);
    CHECK(book.balance(ParticipantId("m")) == share.miner);
    CHECK(book.balance(ParticipantId("h")) + book.balance(ParticipantId("m")) == paid);
  }

  TEST_CASE("complex search names the capability nobody found") {
    const auto req = single({"lidar"});
    auto hidden = node("h", {"lidar"});
    hidden.registered = false;
    hidden.position = {900.0, 900.0};  // out of miner range
    auto miner = node("m", {"cam"}, 0.95);
    miner.is_miner = true;
    const Participant pool[] = {hidden, miner};
    ValueMatrix m;
    RewardBook book;
    const auto res = complex_search(req, plan_for(req, pool), pool, build_registry(pool), m, book, FormationParams{},
                                    good, unit_gain, nullptr);
    CHECK(res.chain.status == ChainStatus::failed);
    CHECK(res.chain.failure.find("lidar") != std::string::npos);
  }

  TEST_CASE("between two hidden holders the better fitting one is picked") {
    auto req = single({"lidar"});
    req.description_d = {"video", "depth"};
    auto near_fit = node("x", {"lidar", "depth"});
    auto poor_fit = node("y", {"lidar"});
    for (auto* p : {&near_fit, &poor_fit}) p->registered = false;
    auto miner = node("m", {"cam"}, 0.95);
    miner.is_miner = true;
    const Participant pool[] = {near_fit, poor_fit, miner};
    ValueMatrix m;
    RewardBook book;
    const auto res = complex_search(req, plan_for(req, pool), pool, build_registry(pool), m, book, FormationParams{},
                                    good, unit_gain, nullptr);
    REQUIRE(res.chain.status == ChainStatus::complete);
    CHECK(res.chain.blocks[1].participant == ParticipantId("x"));
  }

  TEST_CASE("miner reports keep willing candidates in range and merge by best score") {
    const auto req = single({"lidar"});
    auto a = node("a", {"lidar"}), b = node("b", {"lidar"}), far = node("f", {"lidar"});
    far.position = {1000.0, 0.0};
    auto m1 = node("m1", {}), m2 = node("m2", {});
    m2.position = {800.0, 0.0};
    const Participant pool[] = {a, b, far, m1, m2};
    const auto unwilling_b = [](const Participant& p, const Task&) { return p.id == ParticipantId("b") ? -1.0 : 1.0; };
    MinerSearchParams sp;
    sp.top_k = 5;
    const auto r1 = miner_search(m1, req.tasks[0], pool, req.description_d, req.description_d, req.description_d, {},
                                 sp, unwilling_b);
    REQUIRE(r1.size() == 1);
    CHECK(r1[0].option.participant == ParticipantId("a"));
    const auto r2 = miner_search(m2, req.tasks[0], pool, req.description_d, req.description_d, req.description_d, {},
                                 sp, unit_gain);
    REQUIRE(r2.size() == 1);
    CHECK(r2[0].option.participant == ParticipantId("f"));
    std::vector<MinerReport> all(r1.begin(), r1.end());
    all.insert(all.end(), r2.begin(), r2.end());
    const auto merged = merge_reports(all);
    REQUIRE(merged.size() == 2);
    CHECK(merged[0].participant == ParticipantId("a"));
    CHECK(merged[0].miner == ParticipantId("m1"));
    CHECK(merged[1].miner == ParticipantId("m2"));
  }
}
