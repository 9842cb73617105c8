#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "coachme/time.hpp"

namespace coachme {

using TagSet = std::set<std::string>;

enum class Gender { Male, Female, Other };
enum class Education { Primary = 0, Secondary = 1, Tertiary = 2, Postgraduate = 3 };
enum class ActivityKind { Diet, Physical, Wellness };
enum class SlotOrigin { Frequent, Infrequent };
enum class Emotion { Happy, Sad, Angry, Neutral };

// Declaration order is the ranking order: Active > Neutral > Passive.
enum class UserType { Passive = 0, Neutral = 1, Active = 2 };

std::string_view to_string(Gender g);
std::string_view to_string(Education e);
std::string_view to_string(ActivityKind k);
std::string_view to_string(SlotOrigin o);
std::string_view to_string(Emotion e);
std::string_view to_string(UserType t);

Gender parse_gender(std::string_view s);
Education parse_education(std::string_view s);
ActivityKind parse_activity_kind(std::string_view s);
SlotOrigin parse_slot_origin(std::string_view s);
Emotion parse_emotion(std::string_view s);
UserType parse_user_type(std::string_view s);

inline constexpr ActivityKind kAllKinds[] = {ActivityKind::Diet, ActivityKind::Physical, ActivityKind::Wellness};
inline constexpr Emotion kAllEmotions[] = {Emotion::Happy, Emotion::Sad, Emotion::Angry, Emotion::Neutral};

// Closed tag vocabularies for profile fields. The health-condition list is a
// starter set and is meant to be replaced from configuration.
struct Vocabulary {
  TagSet health_conditions;
  TagSet activity_tags;
  TagSet food_tags;
  TagSet resources;

  static Vocabulary defaults();
  bool operator==(const Vocabulary&) const = default;
};

struct UserProfile {
  std::string user_id;
  int age = 0;
  Gender gender = Gender::Other;
  double height_m = 0;
  double weight_kg = 0;
  double bmi = 0;
  Education education = Education::Primary;
  std::string health_condition;
  TagSet preferred_activities;
  TagSet preferred_foods;
  TagSet resources;

  bool operator==(const UserProfile&) const = default;
};

// Profile as submitted; bmi is never accepted from the client.
struct RawProfile {
  std::string user_id;
  int age = 0;
  Gender gender = Gender::Other;
  double height_m = 0;
  double weight_kg = 0;
  Education education = Education::Primary;
  std::string health_condition;
  TagSet preferred_activities;
  TagSet preferred_foods;
  TagSet resources;

  static RawProfile from(const UserProfile& p);
};

// Throws Error("FieldOutOfRange") or Error("UnknownTag"); the message names the field.
UserProfile validate_profile(const RawProfile& raw, const Vocabulary& vocab);

struct Activity {
  std::string activity_id;
  ActivityKind kind = ActivityKind::Diet;
  std::string title;
  TagSet tags;
  TagSet required_resources;
  int importance = 1;

  bool operator==(const Activity&) const = default;
};

void validate_activity(const Activity& a);

using ActivityPool = std::map<std::string, Activity>;

struct ActivityCluster {
  std::string cluster_id;
  std::set<std::string> member_ids;
  bool confirmed = false;

  bool operator==(const ActivityCluster&) const = default;
};

struct PlanSlot {
  Date date;
  int slot_index = 0;
  std::string activity_id;
  SlotOrigin origin = SlotOrigin::Infrequent;

  bool operator==(const PlanSlot&) const = default;
};

struct Plan {
  std::string plan_id;
  std::string user_id;
  std::string template_id;
  Date week_start;
  int slots_per_day = 3;
  std::vector<PlanSlot> slots;  // sorted by (date, slot_index)

  bool covers(Date d) const { return d >= week_start && d < week_start + std::chrono::days{7}; }
  const PlanSlot* find_slot(Date d, int slot_index) const;
  bool operator==(const Plan&) const = default;
};

inline constexpr int kDefaultSlotsPerDay = 3;
inline constexpr int kDaysPerPlan = 7;

// Throws MalformedWeek or UnknownActivity.
Plan new_plan(std::string plan_id, std::string user_id, std::string template_id, Date week_start,
              std::vector<PlanSlot> slots, const ActivityPool& pool, int slots_per_day = kDefaultSlotsPerDay);

struct ComplianceReport {
  std::string user_id;
  std::string plan_id;
  Date date;
  int slot_index = 0;
  bool complied = false;
  Timestamp reported_at;

  bool operator==(const ComplianceReport&) const = default;
};

struct EmotionReport {
  std::string user_id;
  Emotion emotion = Emotion::Neutral;
  Timestamp reported_at;

  bool operator==(const EmotionReport&) const = default;
};

struct SlotKey {
  std::string plan_id;
  Date date;
  int slot_index = 0;

  auto operator<=>(const SlotKey&) const = default;
};

}  // namespace coachme
