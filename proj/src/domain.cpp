#include "coachme/domain.hpp"

#include <algorithm>
#include <cmath>

#include "coachme/error.hpp"

namespace coachme {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view s, const std::string_view (&names)[N], const char* what) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == s) return static_cast<E>(i);
  throw Error("ValidationError", std::string("unknown ") + what + ": " + std::string(s));
}

constexpr std::string_view kGenderNames[] = {"Male", "Female", "Other"};
constexpr std::string_view kEducationNames[] = {"Primary", "Secondary", "Tertiary", "Postgraduate"};
constexpr std::string_view kKindNames[] = {"Diet", "Physical", "Wellness"};
constexpr std::string_view kOriginNames[] = {"Frequent", "Infrequent"};
constexpr std::string_view kEmotionNames[] = {"Happy", "Sad", "Angry", "Neutral"};
constexpr std::string_view kUserTypeNames[] = {"Passive", "Neutral", "Active"};

void check_range(const char* field, double value, double lo, double hi) {
  if (!std::isfinite(value) || value < lo || value > hi)
    throw Error("FieldOutOfRange", std::string(field));
}

void check_tags(const char* field, const TagSet& tags, const TagSet& vocab) {
  for (const auto& t : tags)
    if (!vocab.contains(t)) throw Error("UnknownTag", std::string(field) + ": " + t);
}

}  // namespace

std::string_view to_string(Gender g) { return kGenderNames[static_cast<int>(g)]; }
std::string_view to_string(Education e) { return kEducationNames[static_cast<int>(e)]; }
std::string_view to_string(ActivityKind k) { return kKindNames[static_cast<int>(k)]; }
std::string_view to_string(SlotOrigin o) { return kOriginNames[static_cast<int>(o)]; }
std::string_view to_string(Emotion e) { return kEmotionNames[static_cast<int>(e)]; }
std::string_view to_string(UserType t) { return kUserTypeNames[static_cast<int>(t)]; }

Gender parse_gender(std::string_view s) { return parse_enum<Gender>(s, kGenderNames, "gender"); }
Education parse_education(std::string_view s) { return parse_enum<Education>(s, kEducationNames, "education"); }
ActivityKind parse_activity_kind(std::string_view s) { return parse_enum<ActivityKind>(s, kKindNames, "activity kind"); }
SlotOrigin parse_slot_origin(std::string_view s) { return parse_enum<SlotOrigin>(s, kOriginNames, "slot origin"); }
Emotion parse_emotion(std::string_view s) { return parse_enum<Emotion>(s, kEmotionNames, "emotion"); }
UserType parse_user_type(std::string_view s) { return parse_enum<UserType>(s, kUserTypeNames, "user type"); }

Vocabulary Vocabulary::defaults() {
  Vocabulary v;
  v.health_conditions = {"none", "hypertension", "prediabetes", "type2-diabetes", "obesity", "high-cholesterol"};
  v.activity_tags = {"walking", "hiking", "cycling", "jogging", "swimming", "yoga",
                     "strength", "dancing", "stretching", "meditation", "team-sports"};
  v.food_tags = {"fruit", "vegetables", "fish", "poultry", "legumes", "whole-grains",
                 "dairy", "nuts", "salad", "soup", "fast-food", "sweets"};
  v.resources = {"bicycle", "gym-access", "pool-access", "kitchen", "park-nearby", "yoga-mat"};
  return v;
}

RawProfile RawProfile::from(const UserProfile& p) {
  return RawProfile{p.user_id,         p.age,           p.gender,
                    p.height_m,        p.weight_kg,     p.education,
                    p.health_condition, p.preferred_activities, p.preferred_foods,
                    p.resources};
}

UserProfile validate_profile(const RawProfile& raw, const Vocabulary& vocab) {
  if (raw.user_id.empty()) throw Error("FieldOutOfRange", "user_id");
  check_range("age", raw.age, 10, 120);
  check_range("height_m", raw.height_m, 0.5, 2.5);
  check_range("weight_kg", raw.weight_kg, 20, 300);
  if (!vocab.health_conditions.contains(raw.health_condition))
    throw Error("UnknownTag", "health_condition: " + raw.health_condition);
  check_tags("preferred_activities", raw.preferred_activities, vocab.activity_tags);
  check_tags("preferred_foods", raw.preferred_foods, vocab.food_tags);
  check_tags("resources", raw.resources, vocab.resources);

  UserProfile p;
  p.user_id = raw.user_id;
  p.age = raw.age;
  p.gender = raw.gender;
  p.height_m = raw.height_m;
  p.weight_kg = raw.weight_kg;
  p.bmi = raw.weight_kg / (raw.height_m * raw.height_m);
  p.education = raw.education;
  p.health_condition = raw.health_condition;
  p.preferred_activities = raw.preferred_activities;
  p.preferred_foods = raw.preferred_foods;
  p.resources = raw.resources;
  return p;
}

void validate_activity(const Activity& a) {
  if (a.activity_id.empty()) throw Error("ValidationError", "activity_id empty");
  if (a.tags.empty()) throw Error("ValidationError", "activity " + a.activity_id + " has no tags");
  if (a.importance < 1 || a.importance > 5) throw Error("FieldOutOfRange", "importance");
}

const PlanSlot* Plan::find_slot(Date d, int slot_index) const {
  auto it = std::lower_bound(slots.begin(), slots.end(), std::pair{d, slot_index},
                             [](const PlanSlot& s, const std::pair<Date, int>& key) {
                               return std::pair{s.date, s.slot_index} < key;
                             });
  if (it == slots.end() || it->date != d || it->slot_index != slot_index) return nullptr;
  return &*it;
}

Plan new_plan(std::string plan_id, std::string user_id, std::string template_id, Date week_start,
              std::vector<PlanSlot> slots, const ActivityPool& pool, int slots_per_day) {
  if (slots_per_day < 1) throw Error("MalformedWeek", "slots_per_day must be positive");
  std::sort(slots.begin(), slots.end(), [](const PlanSlot& a, const PlanSlot& b) {
    return std::pair{a.date, a.slot_index} < std::pair{b.date, b.slot_index};
  });
  if (slots.size() != static_cast<std::size_t>(kDaysPerPlan * slots_per_day))
    throw Error("MalformedWeek", "expected " + std::to_string(kDaysPerPlan * slots_per_day) + " slots, got " +
                                     std::to_string(slots.size()));
  // After sorting, a complete week is exactly the row-major enumeration.
  std::size_t i = 0;
  for (int day = 0; day < kDaysPerPlan; ++day) {
    for (int s = 0; s < slots_per_day; ++s, ++i) {
      const Date expected = week_start + std::chrono::days{day};
      if (slots[i].date != expected || slots[i].slot_index != s)
        throw Error("MalformedWeek", "missing slot " + format_date(expected) + "#" + std::to_string(s));
    }
  }
  for (const auto& slot : slots)
    if (!pool.contains(slot.activity_id)) throw Error("UnknownActivity", slot.activity_id);

  Plan plan;
  plan.plan_id = std::move(plan_id);
  plan.user_id = std::move(user_id);
  plan.template_id = std::move(template_id);
  plan.week_start = week_start;
  plan.slots_per_day = slots_per_day;
  plan.slots = std::move(slots);
  return plan;
}

}  // namespace coachme
