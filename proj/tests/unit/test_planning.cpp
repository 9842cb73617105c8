#include <doctest.h>

#include "coachme/config.hpp"
#include "coachme/planning.hpp"
#include "plan_checks.hpp"
#include "support.hpp"

using namespace testing;

namespace {

Activity act(const std::string& id, ActivityKind kind, TagSet tags, TagSet resources = {}) {
  return {id, kind, id, std::move(tags), std::move(resources), 3};
}

ActivityPool tag_pool(std::initializer_list<std::pair<const char*, TagSet>> items) {
  ActivityPool pool;
  for (const auto& [id, tags] : items) pool[id] = act(id, ActivityKind::Physical, tags);
  return pool;
}

FrequencyTable frequent_of(std::initializer_list<const char*> ids, int count = 4) {
  FrequencyTable t;
  for (const char* id : ids) t.entries[id] = {count, count >= 3};
  return t;
}

// Many activities per kind so frequent capacity is never the limit.
ActivityPool wide_pool(int per_kind) {
  ActivityPool pool;
  for (int i = 0; i < per_kind; ++i) {
    const auto n = std::to_string(i);
    pool["d" + n] = act("d" + n, ActivityKind::Diet, {"fruit"});
    pool["p" + n] = act("p" + n, ActivityKind::Physical, {"walking"}, i % 3 == 0 ? TagSet{"bicycle"} : TagSet{});
    pool["w" + n] = act("w" + n, ActivityKind::Wellness, {"yoga"});
  }
  return pool;
}

}  // namespace

TEST_CASE("jaccard similarity") {
  CHECK(jaccard_similarity({"a", "b", "c"}, {"a", "b", "d"}) == 0.5);
  CHECK(jaccard_similarity({"a"}, {"b"}) == 0.0);
  CHECK(jaccard_similarity({}, {}) == 1.0);
  CHECK(jaccard_similarity({"a", "b"}, {"a", "b"}) == 1.0);
}

TEST_CASE("clustering hand cases") {
  const auto merged = propose_clusters(tag_pool({{"x", {"a", "b", "c"}}, {"y", {"a", "b", "d"}}}), 0.5);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].cluster_id == "cl-x");
  CHECK(merged[0].member_ids == std::set<std::string>{"x", "y"});

  CHECK(propose_clusters(tag_pool({{"x", {"a", "b", "c"}}, {"y", {"a", "b", "d"}}}), 0.51).size() == 2);
  const auto apart = propose_clusters(tag_pool({{"x", {"a"}}, {"y", {"b"}}, {"z", {"c"}}}), 0.0001);
  CHECK(apart.size() == 3);
  CHECK(propose_clusters(tag_pool({{"x", {"a", "b"}}, {"y", {"a", "b"}}}), 1.0).size() == 1);
}

TEST_CASE("average linkage uses the mean pairwise similarity") {
  // x,y identical; z shares half with each: avg(z, {x,y}) = 1/3 before the
  // merge of x,y at 1.0. At threshold 0.3 everything joins, at 0.4 z stays out.
  const auto pool = tag_pool({{"x", {"a", "b"}}, {"y", {"a", "b"}}, {"z", {"a", "c"}}});
  CHECK(propose_clusters(pool, 0.3).size() == 1);
  const auto two = propose_clusters(pool, 0.4);
  REQUIRE(two.size() == 2);
  CHECK(two[0].member_ids == std::set<std::string>{"x", "y"});
  CHECK(two[1].cluster_id == "cl-z");
}

TEST_CASE("random pools never merge disjoint tag sets and cluster deterministically") {
  Rng rng(17);
  for (int round = 0; round < 30; ++round) {
    ActivityPool pool;
    const char* tags[] = {"a", "b", "c", "d", "e", "f", "g", "h"};
    for (int i = 0; i < 25; ++i) {
      TagSet t;
      for (const char* x : tags)
        if (rng.bernoulli(0.25)) t.insert(x);
      if (t.empty()) t.insert(tags[rng.index(8)]);
      pool["a" + std::to_string(100 + i)] = act("a" + std::to_string(100 + i), ActivityKind::Diet, t);
    }
    const double threshold = rng.uniform(0.05, 0.9);
    const auto c1 = propose_clusters(pool, threshold);
    CHECK(c1 == propose_clusters(pool, threshold));
    std::set<std::string> covered;
    for (const auto& c : c1) {
      for (const auto& id : c.member_ids) CHECK(covered.insert(id).second);
      CHECK(c.cluster_id == "cl-" + *c.member_ids.begin());
      // A cluster joined only through pairs of positive similarity: every
      // member shares a tag with some other member.
      if (c.member_ids.size() > 1)
        for (const auto& id : c.member_ids) {
          bool linked = false;
          for (const auto& other : c.member_ids)
            if (other != id && jaccard_similarity(pool.at(id).tags, pool.at(other).tags) > 0) linked = true;
          CHECK(linked);
        }
    }
    CHECK(covered.size() == pool.size());
  }
}

TEST_CASE("confirming cluster edits") {
  const auto pool = tag_pool({{"x", {"a", "b", "c"}}, {"y", {"a", "b", "d"}}, {"z", {"q"}}});
  const auto proposed = propose_clusters(pool, 0.5);
  const auto same = confirm_clusters(proposed, {}, pool);
  REQUIRE(same.size() == proposed.size());
  for (std::size_t i = 0; i < same.size(); ++i) {
    CHECK(same[i].member_ids == proposed[i].member_ids);
    CHECK(same[i].confirmed);
  }

  const auto moved = confirm_clusters(proposed, {{ClusterEdit::Op::Move, "cl-z", "", {"y"}}}, pool);
  REQUIRE(moved.size() == 2);
  CHECK(moved[0].member_ids == std::set<std::string>{"x"});
  CHECK(moved[1].member_ids == std::set<std::string>{"y", "z"});

  const auto merged = confirm_clusters(proposed, {{ClusterEdit::Op::Merge, "cl-x", "cl-z", {}}}, pool);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].member_ids.size() == 3);

  const auto split = confirm_clusters(proposed, {{ClusterEdit::Op::Split, "cl-x", "cl-new", {"y"}}}, pool);
  CHECK(split.size() == 3);

  CHECK(error_code([&] { confirm_clusters(proposed, {{ClusterEdit::Op::Assign, "cl-z", "", {"x"}}}, pool); }) ==
        "OverlapViolation");
  CHECK(error_code([&] { confirm_clusters(proposed, {{ClusterEdit::Op::Move, "cl-z", "", {"nope"}}}, pool); }) ==
        "UnknownActivity");
  CHECK(error_code([&] { confirm_clusters(proposed, {{ClusterEdit::Op::Merge, "cl-x", "cl-q", {}}}, pool); }) ==
        "ValidationError");
}

TEST_CASE("feasibility") {
  UserProfile p = validate_profile(john(), Vocabulary::defaults());
  const Activity bike = act("bike", ActivityKind::Physical, {"cycling"}, {"bicycle"});
  const Activity walk = act("walk", ActivityKind::Physical, {"walking"});
  CHECK_FALSE(feasible(bike, p, {}));
  CHECK(feasible(walk, p, {}));
  CHECK(feasible(bike, p, frequent_of({"bike"})));
  CHECK_FALSE(feasible(bike, p, frequent_of({"bike"}, 2)));
}

TEST_CASE("frequent quota is a ceiling") {
  PlanningConfig cfg;
  CHECK(frequent_quota(cfg) == 15);
  cfg.frequent_share = 0.5;
  cfg.slots_per_day = 2;
  CHECK(frequent_quota(cfg) == 7);
  cfg.frequent_share = 0.0;
  CHECK(frequent_quota(cfg) == 0);
}

TEST_CASE("templates validate against slots per day and confirmed clusters") {
  CHECK_NOTHROW(validate_template(baseline_template(), 3, {}));
  PlanTemplate t = baseline_template();
  t.kind_mix[ActivityKind::Diet] = 2;
  CHECK(error_code([&] { validate_template(t, 3, {}); }) == "ValidationError");
  t = baseline_template();
  t.target_clusters = {"cl-x"};
  CHECK(error_code([&] { validate_template(t, 3, {}); }) == "ValidationError");
  CHECK_NOTHROW(validate_template(t, 3, {{"cl-x", {"a"}, true}}));
  CHECK(slot_kinds(baseline_template()) ==
        std::vector<ActivityKind>{ActivityKind::Diet, ActivityKind::Physical, ActivityKind::Wellness});
}

TEST_CASE("fresh user gets only new behaviors") {
  const auto profile = validate_profile(john(), Vocabulary::defaults());
  const auto pool = default_activity_pool();
  const Plan plan = compose_weekly_plan("p1", profile, baseline_template(), pool, {}, {}, day("2025-03-10"), 1);
  CHECK(plan.slots.size() == 21);
  for (const auto& s : plan.slots) CHECK(s.origin == SlotOrigin::Infrequent);
  CHECK(plan_violation(plan, profile, baseline_template(), pool, {}, {}) == "");
}

TEST_CASE("rich history puts at least 15 of 21 slots on habits") {
  const auto profile = validate_profile(john(), Vocabulary::defaults());
  const auto pool = wide_pool(10);
  FrequencyTable freq;
  for (int i = 0; i < 6; ++i)
    for (const char* k : {"d", "p", "w"}) freq.entries[k + std::to_string(i)] = {5, true};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Plan plan = compose_weekly_plan("p1", profile, baseline_template(), pool, {}, freq, day("2025-03-10"), seed);
    int frequent = 0;
    for (const auto& s : plan.slots) frequent += s.origin == SlotOrigin::Frequent;
    CHECK(frequent >= 15);
    CHECK(plan_violation(plan, profile, baseline_template(), pool, freq, {}) == "");
  }
}

TEST_CASE("composition is deterministic under a seed") {
  const auto profile = validate_profile(john(), Vocabulary::defaults());
  const auto pool = wide_pool(5);
  const auto freq = frequent_of({"d1", "p1"});
  const auto a = compose_weekly_plan("p1", profile, baseline_template(), pool, {}, freq, day("2025-03-10"), 9);
  const auto b = compose_weekly_plan("p1", profile, baseline_template(), pool, {}, freq, day("2025-03-10"), 9);
  CHECK(a == b);
}

TEST_CASE("infrequent slots come from the template's target clusters") {
  const auto profile = validate_profile(john(), Vocabulary::defaults());
  const auto pool = wide_pool(4);
  std::vector<ActivityCluster> clusters{{"cl-d0", {"d0", "p1", "w2"}, true}, {"cl-rest", {"d1", "d2", "d3"}, true}};
  PlanTemplate tpl = baseline_template("targeted");
  tpl.target_clusters = {"cl-d0"};
  const Plan plan = compose_weekly_plan("p1", profile, tpl, pool, clusters, {}, day("2025-03-10"), 4);
  for (const auto& s : plan.slots) CHECK(clusters[0].member_ids.contains(s.activity_id));
}

TEST_CASE("no feasible activity for a kind") {
  const auto profile = validate_profile(john(), Vocabulary::defaults());
  ActivityPool pool;
  pool["d"] = act("d", ActivityKind::Diet, {"fruit"});
  pool["w"] = act("w", ActivityKind::Wellness, {"yoga"});
  pool["gym"] = act("gym", ActivityKind::Physical, {"strength"}, {"gym-access"});
  CHECK(error_code([&] { compose_weekly_plan("p", profile, baseline_template(), pool, {}, {}, day("2025-03-10"), 1); }) ==
        "NoFeasibleActivity");
}

TEST_CASE("suggestions follow epsilon") {
  const auto profile = validate_profile(john(), Vocabulary::defaults());
  ActivityPool pool;
  FrequencyTable freq;
  for (int i = 0; i < 1000; ++i) {
    const auto h = "h" + std::to_string(i), n = "n" + std::to_string(i);
    pool[h] = act(h, ActivityKind::Diet, {"fruit"});
    pool[n] = act(n, ActivityKind::Diet, {"fruit"});
    freq.entries[h] = {4, true};
  }
  const auto now = at("2025-03-10T08:00:00Z");
  const auto batch = generate_suggestions(profile, pool, freq, 1000, 42, 0.3, now);
  REQUIRE(batch.size() == 1000);
  int habits = 0;
  std::set<std::string> seen;
  for (const auto& s : batch) {
    habits += s.rationale == SuggestionRationale::FrequentHabit;
    CHECK(seen.insert(s.activity_id).second);
    CHECK((s.activity_id[0] == 'h') == (s.rationale == SuggestionRationale::FrequentHabit));
  }
  CHECK(std::abs(habits / 1000.0 - 0.7) <= 0.05);
  for (const auto& s : generate_suggestions(profile, pool, freq, 50, 1, 0.0, now))
    CHECK(s.rationale == SuggestionRationale::FrequentHabit);
  for (const auto& s : generate_suggestions(profile, pool, freq, 50, 1, 1.0, now))
    CHECK(s.rationale == SuggestionRationale::NewBehavior);
  CHECK(generate_suggestions(profile, pool, freq, 50, 1, 0.3, now) == generate_suggestions(profile, pool, freq, 50, 1, 0.3, now));
}
