#include <doctest.h>

#include "coachme/domain.hpp"
#include "coachme/json_io.hpp"
#include "support.hpp"

using namespace testing;

TEST_CASE("dates and timestamps round-trip through ISO text") {
  CHECK(format_date(day("2025-03-10")) == "2025-03-10");
  CHECK(format_timestamp(at("2025-03-10T18:05:09Z")) == "2025-03-10T18:05:09Z");
  CHECK(date_of(at("2025-03-10T23:59:59Z")) == day("2025-03-10"));
  CHECK(day("2024-02-29") + std::chrono::days{1} == day("2024-03-01"));
  CHECK(error_code([] { parse_date("2025-02-30"); }) == "ValidationError");
  CHECK(error_code([] { parse_date("2025-3-1"); }) == "ValidationError");
  CHECK(error_code([] { parse_timestamp("2025-03-10T25:00:00Z"); }) == "ValidationError");
  CHECK(error_code([] { parse_timestamp("2025-03-10 10:00:00Z"); }) == "ValidationError");
}

TEST_CASE("profile validation derives bmi") {
  const auto vocab = Vocabulary::defaults();
  const UserProfile p = validate_profile(john(), vocab);
  CHECK(p.age == 40);
  CHECK(p.bmi == doctest::Approx(25.0).epsilon(1e-12));

  RawProfile unit = john();
  unit.height_m = 1.0;
  unit.weight_kg = 100.0;
  CHECK(validate_profile(unit, vocab).bmi == 100.0);
}

TEST_CASE("profile validation rejects out-of-range fields and unknown tags") {
  const auto vocab = Vocabulary::defaults();
  RawProfile r = john();
  r.age = 150;
  CHECK(error_code([&] { validate_profile(r, vocab); }) == "FieldOutOfRange");
  r = john();
  r.height_m = 3.0;
  CHECK(error_code([&] { validate_profile(r, vocab); }) == "FieldOutOfRange");
  r = john();
  r.weight_kg = 5;
  CHECK(error_code([&] { validate_profile(r, vocab); }) == "FieldOutOfRange");
  r = john();
  r.user_id.clear();
  CHECK(error_code([&] { validate_profile(r, vocab); }) == "FieldOutOfRange");
  r = john();
  r.preferred_foods.insert("caviar");
  CHECK(error_code([&] { validate_profile(r, vocab); }) == "UnknownTag");
  r = john();
  r.health_condition = "gout";
  CHECK(error_code([&] { validate_profile(r, vocab); }) == "UnknownTag");
}

TEST_CASE("profile json ignores a client-supplied bmi") {
  auto j = raw_profile_to_json(john());
  j["bmi"] = 99.0;
  const RawProfile back = raw_profile_from_json(j);
  CHECK(validate_profile(back, Vocabulary::defaults()).bmi == doctest::Approx(25.0));
  j.erase("age");
  CHECK(error_code([&] { raw_profile_from_json(j); }) == "ValidationError");
}

namespace {

ActivityPool small_pool() {
  ActivityPool pool;
  pool["d1"] = {"d1", ActivityKind::Diet, "Fruit", {"fruit"}, {}, 3};
  pool["p1"] = {"p1", ActivityKind::Physical, "Walk", {"walking"}, {}, 3};
  pool["w1"] = {"w1", ActivityKind::Wellness, "Stretch", {"stretching"}, {}, 2};
  return pool;
}

std::vector<PlanSlot> full_week(Date start, int days) {
  std::vector<PlanSlot> slots;
  const char* ids[] = {"d1", "p1", "w1"};
  for (int d = 0; d < days; ++d)
    for (int s = 0; s < 3; ++s) slots.push_back({start + std::chrono::days{d}, s, ids[s], SlotOrigin::Infrequent});
  return slots;
}

}  // namespace

TEST_CASE("new_plan checks week structure and activity ids") {
  const auto pool = small_pool();
  const Date start = day("2025-03-10");
  auto slots = full_week(start, 7);
  std::reverse(slots.begin(), slots.end());
  const Plan p = new_plan("p1", "john", "baseline-v1", start, slots, pool);
  CHECK(p.slots.size() == 21);
  CHECK(p.slots.front().date == start);
  CHECK(p.find_slot(start + std::chrono::days{6}, 2)->activity_id == "w1");
  CHECK(p.find_slot(start + std::chrono::days{7}, 0) == nullptr);

  CHECK(error_code([&] { new_plan("p1", "john", "t", start, full_week(start, 6), pool); }) == "MalformedWeek");
  auto dup = full_week(start, 7);
  dup[4] = dup[3];
  CHECK(error_code([&] { new_plan("p1", "john", "t", start, dup, pool); }) == "MalformedWeek");
  auto unknown = full_week(start, 7);
  unknown[0].activity_id = "nope";
  CHECK(error_code([&] { new_plan("p1", "john", "t", start, unknown, pool); }) == "UnknownActivity");
}

TEST_CASE("activity validation") {
  Activity a{"x", ActivityKind::Diet, "X", {"fruit"}, {}, 3};
  CHECK_NOTHROW(validate_activity(a));
  a.tags.clear();
  CHECK(error_code([&] { validate_activity(a); }) != "");
  a.tags = {"fruit"};
  a.importance = 6;
  CHECK(error_code([&] { validate_activity(a); }) == "FieldOutOfRange");
}

TEST_CASE("enum names round-trip") {
  for (auto k : kAllKinds) CHECK(parse_activity_kind(to_string(k)) == k);
  for (auto e : kAllEmotions) CHECK(parse_emotion(to_string(e)) == e);
  for (auto t : {UserType::Active, UserType::Neutral, UserType::Passive}) CHECK(parse_user_type(to_string(t)) == t);
  CHECK(error_code([] { parse_emotion("bored"); }) == "ValidationError");
}
