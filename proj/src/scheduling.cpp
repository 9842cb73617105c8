#include "coachme/scheduling.hpp"

#include <algorithm>
#include <array>

#include "coachme/error.hpp"

namespace coachme {

void validate_rule(const TriggerRule& rule) {
  if (rule.minutes < 0 || rule.minutes > 240) throw Error("FieldOutOfRange", "trigger minutes");
  if (rule.hour < 0 || rule.hour > 23) throw Error("FieldOutOfRange", "trigger hour");
}

std::chrono::minutes trigger_time(ActivityKind kind, int slot_index, std::span<const int> complied_hours,
                                  const SchedulingConfig& cfg) {
  const TriggerRule rule = cfg.rules.contains(kind) ? cfg.rules.at(kind) : TriggerRule{};
  switch (rule.policy) {
    case TriggerRule::Policy::FixedOffsetBeforeMeal: {
      const auto meal_idx = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(slot_index, 0)), 0,
                                                    cfg.meal_minutes.size() - 1);
      return std::chrono::minutes{std::max(cfg.meal_minutes[meal_idx] - rule.minutes, 0)};
    }
    case TriggerRule::Policy::HistoricalBestHour: {
      std::array<int, 24> counts{};
      for (int h : complied_hours)
        if (h >= 0 && h < 24) ++counts[static_cast<std::size_t>(h)];
      // max_element returns the first maximum, i.e. the earliest hour on ties.
      const auto best = std::max_element(counts.begin(), counts.end());
      if (*best == 0) return std::chrono::hours{rule.hour};
      return std::chrono::hours{best - counts.begin()};
    }
    case TriggerRule::Policy::FixedHour:
      return std::chrono::hours{rule.hour};
  }
  return std::chrono::hours{rule.hour};
}

std::string_view to_string(NotificationState s) {
  switch (s) {
    case NotificationState::Pending: return "Pending";
    case NotificationState::Dispatched: return "Dispatched";
    case NotificationState::Expired: return "Expired";
  }
  return "Pending";
}

NotificationState parse_notification_state(std::string_view s) {
  if (s == "Pending") return NotificationState::Pending;
  if (s == "Dispatched") return NotificationState::Dispatched;
  if (s == "Expired") return NotificationState::Expired;
  throw Error("ValidationError", "unknown notification state: " + std::string(s));
}

std::vector<ScheduledNotification> plan_notifications(const Plan& plan, const ActivityPool& pool,
                                                      const HourHistory& history, int utc_offset_minutes,
                                                      const SchedulingConfig& cfg) {
  static const std::vector<int> kNoHistory;
  std::vector<ScheduledNotification> out;
  out.reserve(plan.slots.size());
  for (const auto& slot : plan.slots) {
    const Activity& a = pool.at(slot.activity_id);
    const auto hist = history.find(a.kind);
    const auto local = trigger_time(a.kind, slot.slot_index, hist == history.end() ? kNoHistory : hist->second, cfg);
    ScheduledNotification n;
    n.notification_id = plan.plan_id + ":" + format_date(slot.date) + ":" + std::to_string(slot.slot_index);
    n.user_id = plan.user_id;
    n.plan_id = plan.plan_id;
    n.date = slot.date;
    n.slot_index = slot.slot_index;
    n.fire_at = Timestamp{slot.date} + local - std::chrono::minutes{utc_offset_minutes};
    out.push_back(std::move(n));
  }
  return out;
}

DueSplit select_due(const std::map<std::string, ScheduledNotification>& notifications, Timestamp now,
                    const SchedulingConfig& cfg) {
  std::vector<const ScheduledNotification*> due;
  for (const auto& [id, n] : notifications)
    if (n.state == NotificationState::Pending && n.fire_at <= now) due.push_back(&n);
  std::sort(due.begin(), due.end(), [](const auto* a, const auto* b) {
    return std::tie(a->fire_at, a->notification_id) < std::tie(b->fire_at, b->notification_id);
  });
  DueSplit split;
  for (const auto* n : due) (now - n->fire_at > cfg.expiry ? split.expire : split.dispatch).push_back(n->notification_id);
  return split;
}

}  // namespace coachme
