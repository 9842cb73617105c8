#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coachme/domain.hpp"

namespace coachme {

struct AdherenceConfig {
  double active_threshold = 0.7;   // score >= this -> Active
  double passive_threshold = 0.4;  // score < this -> Passive
  int frequent_count = 3;          // complied occurrences to count as frequent
  int window_days = 28;
  double trend_band = 0.02;  // per-day slope
};

struct DailyScore {
  Date date;
  int assigned = 0;
  int complied = 0;

  bool operator==(const DailyScore&) const = default;
};

struct ComplianceWindow {
  std::string user_id;
  Date start;
  Date end;  // inclusive
  int assigned_count = 0;
  int complied_count = 0;
  int report_count = 0;  // complied + declined reports against assigned slots
  std::vector<DailyScore> daily_scores;
};

// For each day the effective plan is the most recently assigned plan covering
// it; `plans` must be in assignment order. Slots dated after `as_of` are not
// yet due and are excluded.
ComplianceWindow build_window(const std::string& user_id, std::span<const Plan* const> plans,
                              std::span<const ComplianceReport> reports, Date as_of, int window_days = 28);

// nullopt means NoData (nothing assigned in the window).
std::optional<double> compliance_score(const ComplianceWindow& window);

enum class TrendKind { Improving, Stable, Declining };
std::string_view to_string(TrendKind t);

struct Trend {
  TrendKind kind = TrendKind::Stable;
  double slope = 0;  // per day
};

// OLS slope of the daily score over days with assigned > 0. Throws InsufficientDays.
Trend trend(const ComplianceWindow& window, double band = 0.02);
Trend classify_slope(double slope, double band = 0.02);

UserType ground_truth_type(std::optional<double> score, const AdherenceConfig& cfg = {});

enum class SlotStatus { Complied, Declined, Unreported };
std::string_view to_string(SlotStatus s);

struct FeedbackRow {
  Date date;
  int slot_index = 0;
  std::string activity_id;
  ActivityKind kind = ActivityKind::Diet;
  SlotStatus status = SlotStatus::Unreported;
};

struct KindTotals {
  int complied = 0;
  int declined = 0;
  int unreported = 0;
};

struct FeedbackSummary {
  std::string user_id;
  std::string plan_id;
  std::vector<FeedbackRow> rows;
  std::map<ActivityKind, KindTotals> by_kind;
  KindTotals total;
};

FeedbackSummary feedback_summary(const Plan& plan, std::span<const ComplianceReport> reports, const ActivityPool& pool);

struct FrequencyEntry {
  int count = 0;
  bool frequent = false;
};

struct FrequencyTable {
  std::map<std::string, FrequencyEntry> entries;  // activity_id -> entry

  bool is_frequent(const std::string& activity_id) const {
    auto it = entries.find(activity_id);
    return it != entries.end() && it->second.frequent;
  }
};

// Complied occurrences per activity over the trailing window ending at as_of.
FrequencyTable frequency_stats(std::span<const Plan* const> plans, std::span<const ComplianceReport> reports,
                               Date as_of, const AdherenceConfig& cfg = {});

}  // namespace coachme
