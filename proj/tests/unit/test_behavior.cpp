#include <doctest.h>

#include <algorithm>

#include "gen.hpp"
#include "volchain/behavior/fuzzify.hpp"
#include "volchain/behavior/ranking.hpp"
#include "volchain/behavior/status.hpp"
#include "volchain/domain/errors.hpp"

using namespace volchain;
using namespace volchain::behavior;

namespace {

// Piecewise-linear memberships over six equal bands, written per segment.
std::array<double, 6> memberships(double x) {
  std::array<double, 6> m{};
  const double w = 1.0 / 6.0;
  for (int k = 0; k < 6; ++k) {
    const double c = (k + 0.5) * w;
    if ((k == 0 && x <= c) || (k == 5 && x >= c)) {
      m[k] = 1.0;
    } else if (x >= c - w && x <= c) {
      m[k] = (x - (c - w)) / w;
    } else if (x > c && x <= c + w) {
      m[k] = ((c + w) - x) / w;
    }
  }
  return m;
}

CompositionMembers crew() {
  CompositionMembers c;
  c.members = {ParticipantId("a"), ParticipantId("b"), ParticipantId("c")};
  c.fog = "fog0";
  return c;
}

RankEvent rate(std::string rater, std::string ratee, double score, RaterKind kind = RaterKind::participant) {
  RankEvent e;
  e.rater_kind = kind;
  e.rater = std::move(rater);
  e.ratee = ParticipantId(std::move(ratee));
  e.task = TaskId("t");
  e.score = score;
  return e;
}

Participant with_c(std::string id, double c) {
  Participant p;
  p.id = ParticipantId(std::move(id));
  p.coop_score_c = c;
  return p;
}

}  // namespace

TEST_SUITE("behavior") {
  TEST_CASE("valid rank grows the ledger, bad ones are rejected") {
    RankLedger l;
    l.record(rate("a", "b", 0.8), crew());
    CHECK(l.size() == 1);
    l.record(rate("fog0", "b", 0.7, RaterKind::fog), crew());
    CHECK(l.size() == 2);
    CHECK_THROWS_AS(l.record(rate("a", "a", 0.8), crew()), RankRejected);
    CHECK_THROWS_AS(l.record(rate("z", "b", 0.8), crew()), RankRejected);
    CHECK_THROWS_AS(l.record(rate("a", "z", 0.8), crew()), RankRejected);
    CHECK_THROWS_AS(l.record(rate("fog9", "b", 0.8, RaterKind::fog), crew()), RankRejected);
    CHECK_THROWS_AS(l.record(rate("a", "b", 1.2), crew()), RankRejected);
    CHECK(l.size() == 2);
  }

  TEST_CASE("aggregate is the mean of the recent window") {
    RankLedger l;
    CHECK(aggregate_score(ParticipantId("b"), l, 3) == 0.5);
    for (double s : {0.1, 0.9, 0.6, 0.3}) l.record(rate("a", "b", s), crew());
    CHECK(aggregate_score(ParticipantId("b"), l, 3) == doctest::Approx(0.6));
    CHECK(aggregate_score(ParticipantId("b"), l, 10) == doctest::Approx(0.475));
    CHECK_THROWS_AS((void)aggregate_score(ParticipantId("b"), l, 0), ParameterError);
  }

  TEST_CASE("fog weight tilts the aggregate") {
    RankLedger l;
    l.record(rate("a", "b", 1.0), crew());
    l.record(rate("fog0", "b", 0.0, RaterKind::fog), crew());
    AggregateConfig cfg;
    cfg.fog_weight = 3.0;
    CHECK(aggregate_score(ParticipantId("b"), l, 5, cfg) == doctest::Approx(0.25));
  }

  TEST_CASE("scaling every score keeps the order of aggregates") {
    gen::Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
      RankLedger l, scaled;
      const double f = gen::uniform(rng, 0.05, 1.0);
      for (int i = 0; i < 30; ++i) {
        const std::string ratee = gen::coin(rng) ? "b" : "c";
        const double s = gen::uniform(rng, 0.0, 1.0);
        l.record(rate("a", ratee, s), crew());
        scaled.record(rate("a", ratee, s * f), crew());
      }
      const double b = aggregate_score(ParticipantId("b"), l, 10), c = aggregate_score(ParticipantId("c"), l, 10);
      const double bs = aggregate_score(ParticipantId("b"), scaled, 10),
                   cs = aggregate_score(ParticipantId("c"), scaled, 10);
      if (std::abs(b - c) > 1e-9) CHECK((b < c) == (bs < cs));
    }
  }

  TEST_CASE("extremes land in the outer categories") {
    CHECK(fuzzify(0.0).category == CoopCategory::HighlyNonCooperative);
    CHECK(fuzzify(1.0).category == CoopCategory::HighlyCooperative);
  }

  TEST_CASE("0.55 is partially cooperative") {
    const auto f = fuzzify(0.55);
    CHECK(f.category == CoopCategory::PartiallyCooperative);
    const auto m = memberships(0.55);
    CHECK(m[3] == doctest::Approx(0.8));
    CHECK(m[2] == doctest::Approx(0.2));
    for (int k = 0; k < 6; ++k) CHECK(f.membership[k] == doctest::Approx(m[k]).epsilon(1e-12));
  }

  TEST_CASE("memberships match the piecewise oracle and sum to one") {
    for (int i = 0; i <= 1000; ++i) {
      const double x = i / 1000.0;
      const auto f = fuzzify(x);
      const auto m = memberships(x);
      double sum = 0.0, centroid = 0.0;
      for (int k = 0; k < 6; ++k) {
        CHECK(f.membership[k] == doctest::Approx(m[k]).epsilon(1e-9));
        sum += m[k];
        centroid += m[k] * (k + 0.5) / 6.0;
      }
      CHECK(sum == doctest::Approx(1.0));
      CHECK(f.c_n == doctest::Approx(centroid / sum).epsilon(1e-9));
      const auto best = std::max_element(m.begin(), m.end());  // first maximum: lower band wins ties
      CHECK(static_cast<int>(f.category) == best - m.begin());
    }
  }

  TEST_CASE("higher aggregate never gives a lower category") {
    gen::Rng rng(42);
    for (int i = 0; i < 5000; ++i) {
      const double a = gen::uniform(rng, 0.0, 1.0), b = gen::uniform(rng, 0.0, 1.0);
      const auto lo = fuzzify(std::min(a, b)), hi = fuzzify(std::max(a, b));
      CHECK(static_cast<int>(lo.category) <= static_cast<int>(hi.category));
    }
  }

  TEST_CASE("fuzzifier bands must be increasing from 0 to 1") {
    FuzzifierConfig cfg;
    cfg.boundaries[2] = cfg.boundaries[1];
    CHECK_THROWS_AS(cfg.validate(), ParameterError);
    FuzzifierConfig off;
    off.boundaries[6] = 0.9;
    CHECK_THROWS_AS(off.validate(), ParameterError);
    CHECK_NOTHROW(FuzzifierConfig{}.validate());
  }

  TEST_CASE("status rules") {
    StatusPolicy pol;
    auto p = with_c("a", 0.5);
    p.category = CoopCategory::NonCooperative;
    CHECK(update_status(p, pol).status == ParticipantStatus::banned);
    p.category = CoopCategory::Cooperative;
    CHECK(update_status(p, pol).status == ParticipantStatus::active);
    for (int i = 0; i < 5; ++i) note_invitation(p, 1.0, false, pol);
    CHECK(p.decline_count == 5);
    CHECK(update_status(p, pol).status == ParticipantStatus::banned);
    auto gone = with_c("w", 0.9);
    gone.status = ParticipantStatus::withdrawn;
    CHECK(update_status(gone, pol).status == ParticipantStatus::withdrawn);
  }

  TEST_CASE("a device that only takes the richest offers is greedy") {
    StatusPolicy pol;
    auto p = with_c("g", 0.8);
    p.category = CoopCategory::Cooperative;
    for (int i = 0; i < 12; ++i) {
      const double offer = 1.0 + i;
      note_invitation(p, offer, i >= 10, pol);
    }
    CHECK(p.decline_count < pol.max_declines + 6);
    CHECK(is_greedy(p, pol));
    CHECK(update_status(p, pol).status == ParticipantStatus::banned);

    auto fair = with_c("f", 0.8);
    for (int i = 0; i < 12; ++i) note_invitation(fair, 1.0 + i, i % 3 != 0, pol);
    CHECK_FALSE(is_greedy(fair, pol));
  }

  TEST_CASE("trust threshold follows the network size") {
    TrustPolicy t;
    CHECK(update_trust_threshold(0.7, 600, t) == doctest::Approx(0.72));
    CHECK(update_trust_threshold(0.7, 500, t) == 0.7);
    CHECK(update_trust_threshold(0.7, 50, t) < 0.7);
    CHECK(update_trust_threshold(0.52, 0, t) == t.min_threshold);
    CHECK(update_trust_threshold(0.89, 100000, t) == t.max_threshold);
  }

  TEST_CASE("miner promotion respects the cap and orders by score then id") {
    MinerPolicy pol;
    std::vector<Participant> pool;
    for (int i = 0; i < 100; ++i) pool.push_back(with_c(gen::tag("u", 100 + i), i < 12 ? 0.8 + 0.01 * (i % 6) : 0.3));
    CHECK(miner_cap(100, pol) == 10);
    CHECK(promote_miners(pool, 0.7, pol) == 10);
    // Twelve eligible, scores 0.80 .. 0.85 twice each: the two 0.80 holders lose.
    std::vector<std::string> left;
    for (const auto& p : pool) {
      if (p.coop_score_c >= 0.7 && !p.is_miner) left.push_back(p.id.str());
    }
    CHECK(left == std::vector<std::string>{"u100", "u106"});
    for (auto& p : pool) {
      if (p.is_miner) p.coop_score_c = 0.66;  // inside the hysteresis band
    }
    CHECK(promote_miners(pool, 0.7, pol) == 10);
    for (auto& p : pool) {
      if (p.is_miner) p.coop_score_c = 0.6;
    }
    pool[0].coop_score_c = 0.95;
    pool[0].is_miner = false;
    // Every miner fell out of the band; only u100 (now 0.95) and u106 qualify.
    CHECK(promote_miners(pool, 0.7, pol) == 2);
    CHECK(pool[0].is_miner);
    CHECK(pool[6].is_miner);
  }

  TEST_CASE("inactive participants are never miners") {
    std::vector<Participant> pool{with_c("a", 0.99), with_c("b", 0.99)};
    pool[0].status = ParticipantStatus::banned;
    MinerPolicy pol;
    pol.cap_fraction = 1.0;
    CHECK(promote_miners(pool, 0.7, pol) == 1);
    CHECK_FALSE(pool[0].is_miner);
  }
}
