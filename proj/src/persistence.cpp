#include "coachme/persistence.hpp"

#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "coachme/error.hpp"
#include "coachme/json_io.hpp"

namespace coachme {

namespace {

constexpr std::string_view kKindNames[] = {
    "UserRegistered",        "PlanAssigned",           "PlanRefined",         "ComplianceReported",
    "EmotionReported",       "NotificationScheduled",  "NotificationDispatched", "NotificationExpired",
    "ClusterConfirmed",      "BroadcastSent",          "ModelLabelAdded",
};

[[noreturn]] void invalid(const std::string& why) { throw Error("PayloadInvalid", why); }

Prediction prediction_from_json(const json& j) {
  Prediction p;
  p.label = j.at("label").get<std::string>();
  p.confidence = j.at("confidence").get<double>();
  p.neighbor_ids = j.at("neighbor_ids").get<std::vector<std::int64_t>>();
  p.status = j.at("status").get<std::string>() == "Ok" ? PredictionStatus::Ok : PredictionStatus::ColdStart;
  return p;
}

UserRecord& mutable_user(State& s, const std::string& id) {
  auto it = s.users.find(id);
  if (it == s.users.end()) invalid("unknown user " + id);
  return it->second;
}

ModelLabel model_label_from_payload(const json& p) {
  ModelLabel l;
  l.model = parse_model_kind(p.at("model").get<std::string>());
  l.user_id = p.at("user_id").get<std::string>();
  l.features = features_from_json(p.at("features"));
  l.label = p.at("label").get<std::string>();
  l.source = parse_instance_source(p.at("source").get<std::string>());
  return l;
}

void apply_payload(State& s, const Event& e) {
  const json& p = e.payload;
  switch (e.kind) {
    case EventKind::UserRegistered: {
      UserRecord u;
      u.profile = p.at("profile").get<UserProfile>();
      u.chat_id = p.at("chat_id").get<std::int64_t>();
      u.display_name = p.at("display_name").get<std::string>();
      u.utc_offset_minutes = p.at("utc_offset_minutes").get<int>();
      u.registration_suggestion = prediction_from_json(p.at("suggestion"));
      u.registered_at = e.ts;
      if (s.users.contains(u.profile.user_id)) invalid("duplicate user " + u.profile.user_id);
      if (s.chats.contains(u.chat_id)) invalid("duplicate chat " + std::to_string(u.chat_id));
      s.chats.emplace(u.chat_id, u.profile.user_id);
      s.users.emplace(u.profile.user_id, std::move(u));
      break;
    }
    case EventKind::PlanAssigned: {
      Plan plan = p.at("plan").get<Plan>();
      UserRecord& u = mutable_user(s, plan.user_id);
      if (s.plans.contains(plan.plan_id)) invalid("duplicate plan " + plan.plan_id);
      u.plan_ids.push_back(plan.plan_id);
      s.plans.emplace(plan.plan_id, std::move(plan));
      break;
    }
    case EventKind::PlanRefined: {
      UserRecord& u = mutable_user(s, p.at("user_id").get<std::string>());
      u.refinements.push_back({p.at("previous_plan_id").get<std::string>(),
                               p.at("refined_template_id").get<std::string>(),
                               parse_date(p.at("as_of").get<std::string>()), e.ts});
      break;
    }
    case EventKind::ComplianceReported: {
      ComplianceReport r = p.at("report").get<ComplianceReport>();
      UserRecord& u = mutable_user(s, r.user_id);
      auto plan = s.plans.find(r.plan_id);
      if (plan == s.plans.end() || plan->second.user_id != r.user_id ||
          plan->second.find_slot(r.date, r.slot_index) == nullptr)
        invalid("report for unassigned slot");
      if (!s.reported.insert({r.plan_id, r.date, r.slot_index}).second) invalid("duplicate report");
      u.last_update_id = std::max(u.last_update_id, p.at("update_id").get<std::int64_t>());
      u.reports.push_back(std::move(r));
      break;
    }
    case EventKind::EmotionReported: {
      EmotionReport r = p.at("report").get<EmotionReport>();
      UserRecord& u = mutable_user(s, r.user_id);
      u.last_update_id = std::max(u.last_update_id, p.at("update_id").get<std::int64_t>());
      u.emotions.push_back(std::move(r));
      break;
    }
    case EventKind::NotificationScheduled: {
      ScheduledNotification n = p.at("notification").get<ScheduledNotification>();
      if (!s.plans.contains(n.plan_id)) invalid("notification for unknown plan " + n.plan_id);
      s.enqueued_plans.insert(n.plan_id);
      if (!s.notifications.emplace(n.notification_id, n).second) invalid("duplicate notification");
      break;
    }
    case EventKind::NotificationDispatched:
    case EventKind::NotificationExpired: {
      auto it = s.notifications.find(p.at("notification_id").get<std::string>());
      if (it == s.notifications.end() || it->second.state != NotificationState::Pending)
        invalid("notification not pending");
      it->second.state = e.kind == EventKind::NotificationDispatched ? NotificationState::Dispatched
                                                                     : NotificationState::Expired;
      break;
    }
    case EventKind::ClusterConfirmed:
      s.clusters = p.at("clusters").get<std::vector<ActivityCluster>>();
      break;
    case EventKind::BroadcastSent:
      s.broadcasts.push_back({p.at("text").get<std::string>(), p.at("filter").get<std::string>(),
                              p.at("chat_ids").get<std::vector<std::int64_t>>(), e.ts});
      break;
    case EventKind::ModelLabelAdded: {
      ModelLabel l = model_label_from_payload(p);
      l.created_at = e.ts;
      UserRecord& u = mutable_user(s, l.user_id);
      const auto expected = p.at("instance_id").get<std::int64_t>();
      const KnnModel& target = l.model == ModelKind::Pre ? s.models.pre : s.models.post;
      if (static_cast<std::int64_t>(target.size()) + 1 != expected) invalid("instance id out of sequence");
      apply_label(s.models, l);
      u.labels.push_back({l.model, expected, l.label, l.source, e.ts});
      break;
    }
  }
}

}  // namespace

std::string_view to_string(EventKind k) { return kKindNames[static_cast<int>(k)]; }

EventKind parse_event_kind(std::string_view s) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i)
    if (kKindNames[i] == s) return static_cast<EventKind>(i);
  throw Error("PayloadInvalid", "unknown event kind " + std::string(s));
}

std::string serialize_event(const Event& e) {
  const json line{{"seq", e.seq},
                  {"ts", format_timestamp(e.ts)},
                  {"kind", to_string(e.kind)},
                  {"payload", e.payload},
                  {"schema_version", kLogSchemaVersion}};
  return line.dump();
}

Event parse_event_line(const std::string& line, std::int64_t expected_seq) {
  try {
    const json j = json::parse(line);
    Event e;
    e.seq = j.at("seq").get<std::int64_t>();
    if (j.at("schema_version").get<int>() != kLogSchemaVersion)
      throw Error("VersionMismatch", "log schema_version " + j.at("schema_version").dump());
    if (e.seq != expected_seq) throw Error("CorruptLine", std::to_string(expected_seq));
    e.ts = parse_timestamp(j.at("ts").get<std::string>());
    e.kind = parse_event_kind(j.at("kind").get<std::string>());
    e.payload = j.at("payload");
    return e;
  } catch (const Error& err) {
    if (err.code() == "VersionMismatch") throw;
    throw Error("CorruptLine", std::to_string(expected_seq));
  } catch (const std::exception&) {
    throw Error("CorruptLine", std::to_string(expected_seq));
  }
}

void validate_payload(EventKind kind, const json& payload) {
  // Decode against a scratch state with the minimum context each kind needs.
  try {
    if (!payload.is_object()) invalid("payload must be an object");
    switch (kind) {
      case EventKind::UserRegistered:
        (void)payload.at("profile").get<UserProfile>();
        (void)payload.at("chat_id").get<std::int64_t>();
        (void)payload.at("display_name").get<std::string>();
        (void)payload.at("utc_offset_minutes").get<int>();
        (void)prediction_from_json(payload.at("suggestion"));
        break;
      case EventKind::PlanAssigned: {
        const Plan plan = payload.at("plan").get<Plan>();
        if (plan.slots.size() != static_cast<std::size_t>(kDaysPerPlan * plan.slots_per_day))
          invalid("plan slot count must be 7 x S");
        break;
      }
      case EventKind::PlanRefined:
        (void)payload.at("user_id").get<std::string>();
        (void)payload.at("previous_plan_id").get<std::string>();
        (void)payload.at("refined_template_id").get<std::string>();
        (void)parse_date(payload.at("as_of").get<std::string>());
        break;
      case EventKind::ComplianceReported:
        (void)payload.at("report").get<ComplianceReport>();
        (void)payload.at("update_id").get<std::int64_t>();
        break;
      case EventKind::EmotionReported:
        (void)payload.at("report").get<EmotionReport>();
        (void)payload.at("update_id").get<std::int64_t>();
        break;
      case EventKind::NotificationScheduled:
        (void)payload.at("notification").get<ScheduledNotification>();
        break;
      case EventKind::NotificationDispatched:
      case EventKind::NotificationExpired:
        (void)payload.at("notification_id").get<std::string>();
        break;
      case EventKind::ClusterConfirmed:
        (void)payload.at("clusters").get<std::vector<ActivityCluster>>();
        break;
      case EventKind::BroadcastSent:
        (void)payload.at("text").get<std::string>();
        (void)payload.at("filter").get<std::string>();
        (void)payload.at("chat_ids").get<std::vector<std::int64_t>>();
        break;
      case EventKind::ModelLabelAdded:
        (void)model_label_from_payload(payload);
        (void)payload.at("instance_id").get<std::int64_t>();
        break;
    }
  } catch (const Error& e) {
    if (e.code() == "PayloadInvalid") throw;
    invalid(std::string(to_string(kind)) + ": " + e.what());
  } catch (const std::exception& e) {
    invalid(std::string(to_string(kind)) + ": " + e.what());
  }
}

const UserRecord& State::user(const std::string& user_id) const {
  auto it = users.find(user_id);
  if (it == users.end()) throw Error("UnknownUser", user_id);
  return it->second;
}

std::vector<const Plan*> State::plans_of(const UserRecord& u) const {
  std::vector<const Plan*> out;
  out.reserve(u.plan_ids.size());
  for (const auto& id : u.plan_ids) out.push_back(&plans.at(id));
  return out;
}

void apply_event(State& state, const Event& event) {
  if (event.seq != state.last_seq + 1)
    throw Error("PayloadInvalid", "event seq " + std::to_string(event.seq) + " follows " + std::to_string(state.last_seq));
  try {
    apply_payload(state, event);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    invalid(std::string(to_string(event.kind)) + ": " + e.what());
  }
  state.last_seq = event.seq;
}

// ---------------------------------------------------------------------------
// Snapshot serialization

nlohmann::json state_to_json(const State& s) {
  json users = json::array();
  for (const auto& [id, u] : s.users) {
    json labels = json::array();
    for (const auto& l : u.labels)
      labels.push_back({{"model", to_string(l.model)},
                        {"instance_id", l.instance_id},
                        {"label", l.label},
                        {"source", to_string(l.source)},
                        {"at", format_timestamp(l.at)}});
    json refinements = json::array();
    for (const auto& r : u.refinements)
      refinements.push_back({{"previous_plan_id", r.previous_plan_id},
                             {"refined_template_id", r.refined_template_id},
                             {"as_of", format_date(r.as_of)},
                             {"at", format_timestamp(r.at)}});
    users.push_back({{"profile", u.profile},
                     {"chat_id", u.chat_id},
                     {"display_name", u.display_name},
                     {"utc_offset_minutes", u.utc_offset_minutes},
                     {"registration_suggestion", u.registration_suggestion},
                     {"registered_at", format_timestamp(u.registered_at)},
                     {"plan_ids", u.plan_ids},
                     {"reports", u.reports},
                     {"emotions", u.emotions},
                     {"labels", labels},
                     {"refinements", refinements},
                     {"last_update_id", u.last_update_id}});
  }
  json plans = json::array();
  for (const auto& [id, p] : s.plans) plans.push_back(p);
  json notifications = json::array();
  for (const auto& [id, n] : s.notifications) notifications.push_back(n);
  json broadcasts = json::array();
  for (const auto& b : s.broadcasts)
    broadcasts.push_back({{"text", b.text}, {"filter", b.filter}, {"chat_ids", b.chat_ids}, {"at", format_timestamp(b.at)}});
  return json{{"last_seq", s.last_seq},
              {"users", users},
              {"plans", plans},
              {"notifications", notifications},
              {"enqueued_plans", s.enqueued_plans},
              {"clusters", s.clusters},
              {"broadcasts", broadcasts},
              {"models", {{"pre", export_model(s.models.pre)}, {"post", export_model(s.models.post)}}}};
}

State state_from_json(const nlohmann::json& j, const ImlConfig& cfg) {
  State s(cfg);
  s.last_seq = j.at("last_seq").get<std::int64_t>();
  for (const auto& ju : j.at("users")) {
    UserRecord u;
    u.profile = ju.at("profile").get<UserProfile>();
    u.chat_id = ju.at("chat_id").get<std::int64_t>();
    u.display_name = ju.at("display_name").get<std::string>();
    u.utc_offset_minutes = ju.at("utc_offset_minutes").get<int>();
    u.registration_suggestion = prediction_from_json(ju.at("registration_suggestion"));
    u.registered_at = parse_timestamp(ju.at("registered_at").get<std::string>());
    u.plan_ids = ju.at("plan_ids").get<std::vector<std::string>>();
    u.reports = ju.at("reports").get<std::vector<ComplianceReport>>();
    u.emotions = ju.at("emotions").get<std::vector<EmotionReport>>();
    for (const auto& l : ju.at("labels"))
      u.labels.push_back({parse_model_kind(l.at("model").get<std::string>()), l.at("instance_id").get<std::int64_t>(),
                          l.at("label").get<std::string>(), parse_instance_source(l.at("source").get<std::string>()),
                          parse_timestamp(l.at("at").get<std::string>())});
    for (const auto& r : ju.at("refinements"))
      u.refinements.push_back({r.at("previous_plan_id").get<std::string>(), r.at("refined_template_id").get<std::string>(),
                               parse_date(r.at("as_of").get<std::string>()),
                               parse_timestamp(r.at("at").get<std::string>())});
    u.last_update_id = ju.at("last_update_id").get<std::int64_t>();
    for (const auto& r : u.reports) s.reported.insert({r.plan_id, r.date, r.slot_index});
    s.chats.emplace(u.chat_id, u.profile.user_id);
    s.users.emplace(u.profile.user_id, std::move(u));
  }
  for (const auto& jp : j.at("plans")) {
    Plan p = jp.get<Plan>();
    s.plans.emplace(p.plan_id, std::move(p));
  }
  for (const auto& jn : j.at("notifications")) {
    auto n = jn.get<ScheduledNotification>();
    s.notifications.emplace(n.notification_id, std::move(n));
  }
  s.enqueued_plans = j.at("enqueued_plans").get<std::set<std::string>>();
  s.clusters = j.at("clusters").get<std::vector<ActivityCluster>>();
  for (const auto& b : j.at("broadcasts"))
    s.broadcasts.push_back({b.at("text").get<std::string>(), b.at("filter").get<std::string>(),
                            b.at("chat_ids").get<std::vector<std::int64_t>>(), parse_timestamp(b.at("at").get<std::string>())});
  s.models.pre = import_model(j.at("models").at("pre"));
  s.models.post = import_model(j.at("models").at("post"));
  return s;
}

// ---------------------------------------------------------------------------
// EventLog

EventLog EventLog::in_memory() { return EventLog{}; }

EventLog EventLog::open(const std::filesystem::path& data_dir, Durability durability) {
  std::error_code ec;
  std::filesystem::create_directories(data_dir, ec);
  if (ec) throw Error("StorageFailure", "cannot create " + data_dir.string() + ": " + ec.message());
  const auto path = data_dir / "events.ndjson";

  EventLog log;
  log.path_ = path;
  log.durability_ = durability;
  std::uintmax_t good_bytes = 0;
  if (std::ifstream in{path, std::ios::binary}) {
    std::string line;
    while (std::getline(in, line)) {
      const bool terminated = !in.eof();
      if (line.empty() && !terminated) break;
      try {
        if (!terminated) throw Error("CorruptLine", std::to_string(log.last_seq() + 1));
        Event e = parse_event_line(line, log.last_seq() + 1);
        log.events_.push_back(std::move(e));
        log.lines_.push_back(line);
        good_bytes += line.size() + 1;
      } catch (const Error& err) {
        if (err.code() != "CorruptLine") throw;
        log.recovered_at_ = log.last_seq() + 1;
        break;
      }
    }
  }
  if (log.recovered_at_) std::filesystem::resize_file(path, good_bytes);
  log.file_ = std::fopen(path.c_str(), "ab");
  if (log.file_ == nullptr) throw Error("StorageFailure", "cannot open " + path.string() + ": " + std::strerror(errno));
  return log;
}

EventLog::EventLog(EventLog&& other) noexcept
    : events_(std::move(other.events_)),
      lines_(std::move(other.lines_)),
      path_(std::move(other.path_)),
      file_(std::exchange(other.file_, nullptr)),
      durability_(other.durability_),
      recovered_at_(other.recovered_at_) {}

EventLog& EventLog::operator=(EventLog&& other) noexcept {
  if (this != &other) {
    if (file_ != nullptr) std::fclose(file_);
    events_ = std::move(other.events_);
    lines_ = std::move(other.lines_);
    path_ = std::move(other.path_);
    file_ = std::exchange(other.file_, nullptr);
    durability_ = other.durability_;
    recovered_at_ = other.recovered_at_;
  }
  return *this;
}

EventLog::~EventLog() {
  if (file_ != nullptr) std::fclose(file_);
}

Event EventLog::append(EventKind kind, Timestamp ts, nlohmann::json payload) {
  validate_payload(kind, payload);
  Event e{last_seq() + 1, ts, kind, std::move(payload)};
  std::string line = serialize_event(e);
  if (file_ != nullptr) {
    const std::string framed = line + "\n";
    if (std::fwrite(framed.data(), 1, framed.size(), file_) != framed.size() || std::fflush(file_) != 0)
      throw Error("StorageFailure", "write to event log failed");
    if (durability_ == Durability::Fsync && ::fsync(::fileno(file_)) != 0)
      throw Error("StorageFailure", "fsync failed");
  }
  lines_.push_back(std::move(line));
  events_.push_back(e);
  return e;
}

std::string EventLog::bytes() const {
  std::string out;
  for (const auto& l : lines_) {
    out += l;
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replay and snapshots

State replay(std::istream& log, const ImlConfig& cfg, ReplayResult* result, bool recover) {
  State state(cfg);
  ReplayResult local;
  std::string line;
  while (std::getline(log, line)) {
    const bool terminated = !log.eof();
    if (line.empty() && !terminated) break;
    const std::int64_t seq = state.last_seq + 1;
    try {
      if (!terminated) throw Error("CorruptLine", std::to_string(seq));
      apply_event(state, parse_event_line(line, seq));
      ++local.applied;
    } catch (const Error& e) {
      if (e.code() != "CorruptLine" || !recover) throw;
      local.corrupt_seq = seq;
      break;
    }
  }
  if (result != nullptr) *result = local;
  return state;
}

State replay_events(const std::vector<Event>& events, const ImlConfig& cfg) {
  State state(cfg);
  for (const auto& e : events) apply_event(state, e);
  return state;
}

nlohmann::json make_snapshot(const State& state) {
  return json{{"schema_version", kLogSchemaVersion}, {"as_of_seq", state.last_seq}, {"state", state_to_json(state)}};
}

State load_snapshot(const nlohmann::json& snapshot, const std::vector<Event>& tail, const ImlConfig& cfg) {
  if (!snapshot.contains("schema_version") || snapshot.at("schema_version") != kLogSchemaVersion)
    throw Error("VersionMismatch", "snapshot schema_version " + snapshot.value("schema_version", json()).dump());
  State state = state_from_json(snapshot.at("state"), cfg);
  if (state.last_seq != snapshot.at("as_of_seq").get<std::int64_t>())
    throw Error("PayloadInvalid", "snapshot as_of_seq disagrees with state");
  for (const auto& e : tail)
    if (e.seq > state.last_seq) apply_event(state, e);
  return state;
}

void write_snapshot(const std::filesystem::path& data_dir, const State& state) {
  const auto final_path = data_dir / ("snapshot-" + std::to_string(state.last_seq) + ".json");
  const auto tmp = final_path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << make_snapshot(state).dump() << '\n';
    if (!out) throw Error("StorageFailure", "cannot write " + tmp);
  }
  std::filesystem::rename(tmp, final_path);
}

std::optional<std::filesystem::path> latest_snapshot(const std::filesystem::path& data_dir) {
  std::optional<std::filesystem::path> best;
  std::int64_t best_seq = -1;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(data_dir, ec)) {
    const std::string name = entry.path().filename().string();
    if (!name.starts_with("snapshot-") || !name.ends_with(".json")) continue;
    try {
      const auto seq = std::stoll(name.substr(9, name.size() - 14));
      if (seq > best_seq) {
        best_seq = seq;
        best = entry.path();
      }
    } catch (const std::exception&) {
    }
  }
  return best;
}

}  // namespace coachme
