#include <doctest.h>

#include <set>

#include "gen.hpp"
#include "volchain/domain/errors.hpp"
#include "volchain/similarity/similarity.hpp"

using namespace volchain;
using similarity::comp_char;

namespace {

// Counts matches by walking every pair of tags, independent of FeatureSet's
// merge-based set algebra.
double oracle(const std::vector<std::string>& a, const std::vector<std::string>& b, double wm, double wn,
              bool symdiff = false) {
  std::set<std::string> all(a.begin(), a.end());
  all.insert(b.begin(), b.end());
  double match = 0.0;
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (x == y) match += 1.0;
    }
  }
  double other = static_cast<double>(all.size());
  if (symdiff) other -= match;
  const double den = wm * match + wn * other;
  return den == 0.0 ? 0.0 : match / den;
}

Participant with(FeatureSet caps, FeatureSet prefs = {}) {
  Participant p;
  p.id = ParticipantId("p");
  p.capabilities = std::move(caps);
  p.preferences = std::move(prefs);
  return p;
}

Task needing(FeatureSet caps, FeatureSet chars = {}) {
  Task t;
  t.id = TaskId("t");
  t.required_capability = std::move(caps);
  t.characteristics = std::move(chars);
  return t;
}

}  // namespace

TEST_SUITE("similarity") {
  TEST_CASE("identical sets score 1") {
    CHECK(comp_char({"x", "y", "z"}, {"x", "y", "z"}, {}) == 1.0);
  }

  TEST_CASE("disjoint sets score 0 under any weights") {
    RewardParams p;
    for (double wm : {0.1, 0.5, 2.0}) {
      p.w_match = wm;
      p.w_nonmatch = 1.0 - wm / 4.0;
      CHECK(comp_char({"x"}, {"y"}, p) == 0.0);
    }
  }

  TEST_CASE("overlap of two in four scores two thirds") {
    const double got = comp_char({"a", "b", "c"}, {"b", "c", "d"}, {});
    const double want = oracle({"a", "b", "c"}, {"b", "c", "d"}, 0.5, 0.5);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    CHECK(std::abs(got - 0.6667) < 1e-4);
    CHECK(std::abs(got - 2.0 / 3.0) < 1e-9);
  }

  TEST_CASE("both empty scores 0") { CHECK(comp_char({}, {}, {}) == 0.0); }

  TEST_CASE("zero weight sum is a parameter error") {
    RewardParams p;
    p.w_match = 0.0;
    p.w_nonmatch = 0.0;
    CHECK_THROWS_AS((void)comp_char({"a"}, {"a"}, p), ParameterError);
  }

  TEST_CASE("symdiff mode counts only the non-matching tags") {
    RewardParams p;
    p.nonmatch_mode = NonmatchMode::symdiff_count;
    const double got = comp_char({"a", "b", "c"}, {"b", "c", "d"}, p);
    CHECK(got == doctest::Approx(oracle({"a", "b", "c"}, {"b", "c", "d"}, 0.5, 0.5, true)).epsilon(1e-12));
  }

  TEST_CASE("random sets agree with the pairwise oracle, are symmetric and bounded") {
    gen::Rng rng(21);
    const RewardParams def;
    for (int i = 0; i < 5000; ++i) {
      const auto a = gen::features(rng, "f", 8);
      const auto b = gen::features(rng, "f", 8);
      const double s = comp_char(a, b, def);
      CHECK(s == doctest::Approx(oracle(a.tags(), b.tags(), 0.5, 0.5)).epsilon(1e-12));
      CHECK(s == comp_char(b, a, def));
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      CHECK((s == 1.0) == (a == b && !a.empty()));
    }
  }

  TEST_CASE("adding a common tag never lowers the score") {
    gen::Rng rng(22);
    for (int i = 0; i < 3000; ++i) {
      const auto a = gen::features(rng, "f", 8);
      const auto b = gen::features(rng, "f", 8);
      const FeatureSet extra{"shared" + std::to_string(gen::below(rng, 3))};
      CHECK(comp_char(a.united(extra), b.united(extra), {}) >= comp_char(a, b, {}) - 1e-15);
    }
  }

  TEST_CASE("preference match compares against the threshold") {
    const RewardParams def;
    CHECK(similarity::task_preference_match(with({}, {"a", "b"}), needing({}, {"a", "b"}), def, 0.5));
    CHECK_FALSE(similarity::task_preference_match(with({}, {"a"}), needing({}, {"b"}), def, 0.1));
    CHECK(similarity::task_preference_match(with({}, {"a", "b", "c"}), needing({}, {"b", "c", "d"}), def, 0.5));
    CHECK_FALSE(similarity::task_preference_match(with({}, {"a", "b", "c"}), needing({}, {"b", "c", "d"}), def, 0.7));
  }

  TEST_CASE("capability match is a subset test") {
    CHECK(similarity::capability_match(with({"gpu", "cam"}), needing({"gpu"})));
    CHECK_FALSE(similarity::capability_match(with({"gpu"}), needing({"gpu", "lidar"})));
    CHECK(similarity::capability_match(with({}), needing({})));
    CHECK(similarity::capability_match(with({"x"}), needing({})));
  }
}
