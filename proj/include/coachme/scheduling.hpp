#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "coachme/domain.hpp"

namespace coachme {

struct TriggerRule {
  enum class Policy { FixedOffsetBeforeMeal, HistoricalBestHour, FixedHour };
  Policy policy = Policy::HistoricalBestHour;
  int minutes = 60;  // FixedOffsetBeforeMeal: lead time, [0, 240]
  int hour = 18;     // HistoricalBestHour: fallback; FixedHour: the hour. [0, 23]

  bool operator==(const TriggerRule&) const = default;
};

struct SchedulingConfig {
  std::map<ActivityKind, TriggerRule> rules{
      {ActivityKind::Diet, {TriggerRule::Policy::FixedOffsetBeforeMeal, 60, 18}},
      {ActivityKind::Physical, {TriggerRule::Policy::HistoricalBestHour, 60, 18}},
      {ActivityKind::Wellness, {TriggerRule::Policy::HistoricalBestHour, 60, 18}},
  };
  // Minutes after local midnight; slot_index picks the meal, clamped to dinner.
  std::vector<int> meal_minutes{8 * 60, 12 * 60 + 30, 19 * 60};
  std::chrono::hours expiry{24};
};

void validate_rule(const TriggerRule& rule);

// Local time of day to fire a reminder. `complied_hours` are the local hours
// at which the user previously reported complying with this kind of activity.
std::chrono::minutes trigger_time(ActivityKind kind, int slot_index, std::span<const int> complied_hours,
                                  const SchedulingConfig& cfg = {});

enum class NotificationState { Pending, Dispatched, Expired };
std::string_view to_string(NotificationState s);
NotificationState parse_notification_state(std::string_view s);

struct ScheduledNotification {
  std::string notification_id;  // "<plan_id>:<date>:<slot>"
  std::string user_id;
  std::string plan_id;
  Date date;
  int slot_index = 0;
  Timestamp fire_at;
  NotificationState state = NotificationState::Pending;

  bool operator==(const ScheduledNotification&) const = default;
};

// Past complied hours per activity kind, in the user's local time.
using HourHistory = std::map<ActivityKind, std::vector<int>>;

// One Pending notification per slot. utc_offset_minutes converts local
// trigger times to UTC (local = UTC + offset).
std::vector<ScheduledNotification> plan_notifications(const Plan& plan, const ActivityPool& pool,
                                                      const HourHistory& history, int utc_offset_minutes,
                                                      const SchedulingConfig& cfg = {});

// The due queue. Mutation happens only through the event-sourced state, so
// this is a set of pure selectors over a notification map.
struct DueSplit {
  std::vector<std::string> dispatch;  // fire_at <= now, within expiry
  std::vector<std::string> expire;    // more than `expiry` past fire_at
};

DueSplit select_due(const std::map<std::string, ScheduledNotification>& notifications, Timestamp now,
                    const SchedulingConfig& cfg = {});

}  // namespace coachme
