#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "coachme/bot_gateway.hpp"
#include "coachme/config.hpp"
#include "coachme/persistence.hpp"

namespace coachme {

struct RankingRow {
  std::string user_id;
  std::string display_name;
  std::optional<double> compliance_score;  // nullopt: NoData
  Prediction predicted;
  std::optional<Trend> trend;
  std::optional<Timestamp> last_report_at;
};

struct RegistrationResult {
  std::string user_id;
  Prediction suggestion;
};

struct RefinementResult {
  Plan plan;
  std::vector<LabelRecord> labels;
};

struct DispatchResult {
  std::vector<ScheduledNotification> dispatched;
  std::vector<std::string> expired;
  std::vector<OutboundMessage> messages;
};

// The caregiver-facing backend. All state changes are events appended to the
// log and then applied to the in-memory state; reads take a shared lock.
class Service {
 public:
  // Replays whatever the log already holds.
  Service(ServiceConfig cfg, EventLog log, const Clock& clock);
  // Starts from a snapshot, replaying only the log tail past it.
  Service(ServiceConfig cfg, EventLog log, const Clock& clock, const nlohmann::json& snapshot);

  RegistrationResult register_user(const RawProfile& profile, std::int64_t chat_id, std::string display_name = {},
                                   int utc_offset_minutes = 0);
  Plan assign_plan(const std::string& user_id, const std::string& template_id, Date week_start);
  RefinementResult refine_plan(const std::string& user_id, const std::string& refined_template_id, Date as_of);
  std::vector<RankingRow> ranking(Date as_of) const;
  // filter: "all" | "type:<Active|Neutral|Passive>" | "user:<user_id>"
  std::vector<OutboundMessage> broadcast(const std::string& text, const std::string& filter);
  nlohmann::json user_detail(const std::string& user_id, Date as_of) const;
  std::vector<ActivityCluster> proposed_clusters(std::optional<double> threshold = std::nullopt) const;
  std::vector<ActivityCluster> confirm_clusters(const std::vector<ClusterEdit>& edits);
  std::vector<Suggestion> suggestions(const std::string& user_id, int n, Date as_of, std::uint64_t seed) const;

  // Gateway ingress: one wire update in, outbound messages out.
  std::vector<OutboundMessage> bot_update(std::string_view wire);
  // Marks due notifications Dispatched (or Expired past the cutoff).
  DispatchResult collect_due(Timestamp now);
  // Throws DuplicateEnqueue. assign_plan already enqueues.
  std::vector<ScheduledNotification> enqueue_plan(const std::string& plan_id);

  Prediction pre_predict(const UserProfile& profile) const;
  Prediction post_predict(const std::string& user_id, Date as_of) const;

  State snapshot_state() const;
  std::int64_t version() const;
  std::string log_bytes() const;
  const EventLog& log() const { return log_; }
  const ServiceConfig& config() const { return cfg_; }
  const Clock& clock() const { return clock_; }
  Date today() const { return date_of(clock_.now()); }

 private:
  UserHistoryView view_of(const UserRecord& u, std::vector<const Plan*>& plans) const;
  void commit(const std::vector<PendingEvent>& events);
  std::vector<PendingEvent> plan_events(const UserRecord& u, const PlanTemplate& tpl, Date week_start,
                                        std::vector<PendingEvent> pending_labels_first, Plan* out_plan) const;
  std::vector<PendingEvent> enqueue_events(const Plan& plan) const;
  Prediction post_predict_locked(const UserRecord& u, Date as_of) const;
  const PlanTemplate& template_or_throw(const std::string& id) const;

  ServiceConfig cfg_;
  EventLog log_;
  const Clock& clock_;
  State state_;
  std::map<std::int64_t, std::int64_t> seen_updates_;  // chat -> highest update id (non-persisted)
  mutable std::shared_mutex mutex_;
};

nlohmann::json ranking_row_to_json(const RankingRow& row);

}  // namespace coachme
