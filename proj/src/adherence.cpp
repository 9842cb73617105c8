#include "coachme/adherence.hpp"

#include "coachme/error.hpp"

namespace coachme {

namespace {

const Plan* effective_plan(std::span<const Plan* const> plans, Date d) {
  for (auto it = plans.rbegin(); it != plans.rend(); ++it)
    if ((*it)->covers(d)) return *it;
  return nullptr;
}

}  // namespace

ComplianceWindow build_window(const std::string& user_id, std::span<const Plan* const> plans,
                              std::span<const ComplianceReport> reports, Date as_of, int window_days) {
  ComplianceWindow w;
  w.user_id = user_id;
  w.end = as_of;
  w.start = as_of - std::chrono::days{window_days - 1};
  w.daily_scores.reserve(static_cast<std::size_t>(window_days));
  for (Date d = w.start; d <= w.end; d += std::chrono::days{1}) {
    DailyScore day{d, 0, 0};
    if (const Plan* plan = effective_plan(plans, d)) {
      day.assigned = plan->slots_per_day;
    }
    w.daily_scores.push_back(day);
  }
  for (const auto& r : reports) {
    if (r.date < w.start || r.date > w.end) continue;
    const Plan* plan = effective_plan(plans, r.date);
    if (plan == nullptr || plan->plan_id != r.plan_id || plan->find_slot(r.date, r.slot_index) == nullptr) continue;
    ++w.report_count;
    if (r.complied) ++w.daily_scores[static_cast<std::size_t>((r.date - w.start).count())].complied;
  }
  for (const auto& day : w.daily_scores) {
    w.assigned_count += day.assigned;
    w.complied_count += day.complied;
  }
  return w;
}

std::optional<double> compliance_score(const ComplianceWindow& window) {
  if (window.assigned_count == 0) return std::nullopt;
  return static_cast<double>(window.complied_count) / static_cast<double>(window.assigned_count);
}

std::string_view to_string(TrendKind t) {
  switch (t) {
    case TrendKind::Improving: return "Improving";
    case TrendKind::Stable: return "Stable";
    case TrendKind::Declining: return "Declining";
  }
  return "Stable";
}

Trend classify_slope(double slope, double band) {
  if (slope > band) return {TrendKind::Improving, slope};
  if (slope < -band) return {TrendKind::Declining, slope};
  return {TrendKind::Stable, slope};
}

Trend trend(const ComplianceWindow& window, double band) {
  std::vector<std::pair<double, double>> points;
  for (const auto& day : window.daily_scores) {
    if (day.assigned == 0) continue;
    points.emplace_back(static_cast<double>((day.date - window.start).count()),
                        static_cast<double>(day.complied) / static_cast<double>(day.assigned));
  }
  if (points.size() < 2) throw Error("InsufficientDays", "trend needs at least two scored days");
  double mx = 0, my = 0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxy = 0, sxx = 0;
  for (const auto& [x, y] : points) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return classify_slope(sxy / sxx, band);
}

UserType ground_truth_type(std::optional<double> score, const AdherenceConfig& cfg) {
  if (!score) return UserType::Neutral;
  if (*score >= cfg.active_threshold) return UserType::Active;
  if (*score >= cfg.passive_threshold) return UserType::Neutral;
  return UserType::Passive;
}

std::string_view to_string(SlotStatus s) {
  switch (s) {
    case SlotStatus::Complied: return "Complied";
    case SlotStatus::Declined: return "Declined";
    case SlotStatus::Unreported: return "Unreported";
  }
  return "Unreported";
}

FeedbackSummary feedback_summary(const Plan& plan, std::span<const ComplianceReport> reports, const ActivityPool& pool) {
  std::map<std::pair<Date, int>, bool> outcome;
  for (const auto& r : reports)
    if (r.plan_id == plan.plan_id) outcome.emplace(std::pair{r.date, r.slot_index}, r.complied);

  FeedbackSummary s;
  s.user_id = plan.user_id;
  s.plan_id = plan.plan_id;
  for (const auto& slot : plan.slots) {
    FeedbackRow row;
    row.date = slot.date;
    row.slot_index = slot.slot_index;
    row.activity_id = slot.activity_id;
    if (auto a = pool.find(slot.activity_id); a != pool.end()) row.kind = a->second.kind;
    auto it = outcome.find({slot.date, slot.slot_index});
    row.status = it == outcome.end() ? SlotStatus::Unreported : (it->second ? SlotStatus::Complied : SlotStatus::Declined);
    KindTotals& k = s.by_kind[row.kind];
    for (KindTotals* t : {&k, &s.total}) {
      switch (row.status) {
        case SlotStatus::Complied: ++t->complied; break;
        case SlotStatus::Declined: ++t->declined; break;
        case SlotStatus::Unreported: ++t->unreported; break;
      }
    }
    s.rows.push_back(std::move(row));
  }
  return s;
}

FrequencyTable frequency_stats(std::span<const Plan* const> plans, std::span<const ComplianceReport> reports,
                               Date as_of, const AdherenceConfig& cfg) {
  std::map<std::string, const Plan*> by_id;
  for (const Plan* p : plans) by_id.emplace(p->plan_id, p);
  const Date start = as_of - std::chrono::days{cfg.window_days - 1};

  FrequencyTable table;
  for (const auto& r : reports) {
    if (!r.complied || r.date < start || r.date > as_of) continue;
    auto it = by_id.find(r.plan_id);
    if (it == by_id.end()) continue;
    if (const PlanSlot* slot = it->second->find_slot(r.date, r.slot_index))
      ++table.entries[slot->activity_id].count;
  }
  for (auto& [id, e] : table.entries) e.frequent = e.count >= cfg.frequent_count;
  return table;
}

}  // namespace coachme
