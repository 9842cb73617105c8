#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "coachme/domain.hpp"
#include "coachme/iml.hpp"
#include "coachme/scheduling.hpp"

namespace coachme {

inline constexpr int kLogSchemaVersion = 1;

enum class EventKind {
  UserRegistered,
  PlanAssigned,
  PlanRefined,
  ComplianceReported,
  EmotionReported,
  NotificationScheduled,
  NotificationDispatched,
  NotificationExpired,
  ClusterConfirmed,
  BroadcastSent,
  ModelLabelAdded,
};
std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

struct Event {
  std::int64_t seq = 0;
  Timestamp ts;
  EventKind kind = EventKind::UserRegistered;
  nlohmann::json payload;

  bool operator==(const Event&) const = default;
};

std::string serialize_event(const Event& e);
// Throws CorruptLine.
Event parse_event_line(const std::string& line, std::int64_t expected_seq);

// Throws PayloadInvalid if the payload does not decode for its kind.
void validate_payload(EventKind kind, const nlohmann::json& payload);

struct LabelRecord {
  ModelKind model = ModelKind::Pre;
  std::int64_t instance_id = 0;
  std::string label;
  InstanceSource source = InstanceSource::CaregiverAssignment;
  Timestamp at;

  bool operator==(const LabelRecord&) const = default;
};

struct RefinementRecord {
  std::string previous_plan_id;
  std::string refined_template_id;
  Date as_of;
  Timestamp at;

  bool operator==(const RefinementRecord&) const = default;
};

struct UserRecord {
  UserProfile profile;
  std::int64_t chat_id = 0;
  std::string display_name;
  int utc_offset_minutes = 0;
  Prediction registration_suggestion;
  Timestamp registered_at;
  std::vector<std::string> plan_ids;  // assignment order
  std::vector<ComplianceReport> reports;
  std::vector<EmotionReport> emotions;
  std::vector<LabelRecord> labels;
  std::vector<RefinementRecord> refinements;
  std::int64_t last_update_id = 0;  // highest bot update that produced an event

  bool operator==(const UserRecord&) const = default;
};

struct BroadcastRecord {
  std::string text;
  std::string filter;
  std::vector<std::int64_t> chat_ids;
  Timestamp at;

  bool operator==(const BroadcastRecord&) const = default;
};

// Everything materialized from the event log.
struct State {
  std::int64_t last_seq = 0;
  std::map<std::string, UserRecord> users;
  std::map<std::int64_t, std::string> chats;  // chat_id -> user_id
  std::map<std::string, Plan> plans;
  std::set<SlotKey> reported;
  std::map<std::string, ScheduledNotification> notifications;
  std::set<std::string> enqueued_plans;
  std::vector<ActivityCluster> clusters;
  std::vector<BroadcastRecord> broadcasts;
  ModelRegistry models;

  explicit State(const ImlConfig& cfg) : models(ModelRegistry::create(cfg)) {}

  const UserRecord& user(const std::string& user_id) const;  // throws UnknownUser
  std::vector<const Plan*> plans_of(const UserRecord& u) const;
  bool operator==(const State&) const = default;
};

// Applies one event; events must arrive in seq order. Throws PayloadInvalid
// when the payload contradicts the state (unknown user, duplicate slot...).
void apply_event(State& state, const Event& event);

nlohmann::json state_to_json(const State& state);
State state_from_json(const nlohmann::json& j, const ImlConfig& cfg);

// Append-only newline-delimited JSON log. Lines are kept in memory as well,
// so an in-memory log and a file-backed one produce the same bytes.
class EventLog {
 public:
  enum class Durability { Flush, Fsync };

  static EventLog in_memory();
  // Opens data_dir/events.ndjson, creating it if needed. A torn final line is
  // truncated away (the writer died mid-append).
  static EventLog open(const std::filesystem::path& data_dir, Durability durability = Durability::Fsync);

  EventLog(EventLog&&) noexcept;
  EventLog& operator=(EventLog&&) noexcept;
  ~EventLog();

  // Validates, writes and returns the new seq. Throws PayloadInvalid, StorageFailure.
  Event append(EventKind kind, Timestamp ts, nlohmann::json payload);

  std::int64_t last_seq() const { return static_cast<std::int64_t>(events_.size()); }
  const std::vector<Event>& events() const { return events_; }
  std::string bytes() const;
  std::optional<std::filesystem::path> path() const { return path_; }
  std::optional<std::int64_t> recovered_from_corruption() const { return recovered_at_; }

 private:
  EventLog() = default;

  std::vector<Event> events_;
  std::vector<std::string> lines_;
  std::optional<std::filesystem::path> path_;
  std::FILE* file_ = nullptr;
  Durability durability_ = Durability::Flush;
  std::optional<std::int64_t> recovered_at_;
};

struct ReplayResult {
  std::int64_t applied = 0;
  std::optional<std::int64_t> corrupt_seq;  // first seq that failed to parse
};

// Strict replay throws CorruptLine; recovering replay stops before the bad
// line and reports it.
State replay(std::istream& log, const ImlConfig& cfg, ReplayResult* result = nullptr, bool recover = false);
State replay_events(const std::vector<Event>& events, const ImlConfig& cfg);

nlohmann::json make_snapshot(const State& state);
// Throws VersionMismatch.
State load_snapshot(const nlohmann::json& snapshot, const std::vector<Event>& tail, const ImlConfig& cfg);

void write_snapshot(const std::filesystem::path& data_dir, const State& state);
std::optional<std::filesystem::path> latest_snapshot(const std::filesystem::path& data_dir);

}  // namespace coachme
