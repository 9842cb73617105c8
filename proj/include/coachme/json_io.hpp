#pragma once

#include <json.hpp>

#include "coachme/adherence.hpp"
#include "coachme/domain.hpp"
#include "coachme/knn.hpp"
#include "coachme/planning.hpp"
#include "coachme/scheduling.hpp"

// nlohmann/json adapters for the wire and storage shapes. Enums travel as
// their names, dates as YYYY-MM-DD, timestamps as YYYY-MM-DDTHH:MM:SSZ.
namespace coachme {

using nlohmann::json;

void to_json(json& j, const UserProfile& p);
void from_json(const json& j, UserProfile& p);

// Client-side profile. Missing fields raise ValidationError; a supplied bmi is ignored.
RawProfile raw_profile_from_json(const json& j);
json raw_profile_to_json(const RawProfile& r);

void to_json(json& j, const Activity& a);
void from_json(const json& j, Activity& a);
ActivityPool activity_pool_from_json(const json& j);

void to_json(json& j, const ActivityCluster& c);
void from_json(const json& j, ActivityCluster& c);

void to_json(json& j, const PlanSlot& s);
void from_json(const json& j, PlanSlot& s);
void to_json(json& j, const Plan& p);
void from_json(const json& j, Plan& p);

void to_json(json& j, const ComplianceReport& r);
void from_json(const json& j, ComplianceReport& r);
void to_json(json& j, const EmotionReport& r);
void from_json(const json& j, EmotionReport& r);

void to_json(json& j, const ScheduledNotification& n);
void from_json(const json& j, ScheduledNotification& n);

void to_json(json& j, const PlanTemplate& t);
void from_json(const json& j, PlanTemplate& t);

void to_json(json& j, const Prediction& p);
void to_json(json& j, const FeedbackSummary& s);
void to_json(json& j, const DailyScore& d);
void to_json(json& j, const Suggestion& s);

ClusterEdit cluster_edit_from_json(const json& j);

}  // namespace coachme
