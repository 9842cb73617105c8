#include "coachme/service.hpp"

#include <algorithm>

#include "coachme/error.hpp"
#include "coachme/json_io.hpp"

namespace coachme {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string last_pre_label(const UserRecord& u) {
  for (auto it = u.labels.rbegin(); it != u.labels.rend(); ++it)
    if (it->model == ModelKind::Pre) return it->label;
  return {};
}

json label_payload(const ModelLabel& l) {
  return json{{"model", to_string(l.model)},
              {"user_id", l.user_id},
              {"instance_id", 0},
              {"label", l.label},
              {"source", to_string(l.source)},
              {"features", features_to_json(l.features)}};
}

HourHistory hour_history(const State& s, const UserRecord& u, const ActivityPool& pool) {
  HourHistory h;
  for (const auto& r : u.reports) {
    if (!r.complied) continue;
    const PlanSlot* slot = s.plans.at(r.plan_id).find_slot(r.date, r.slot_index);
    const auto local = r.reported_at + std::chrono::minutes{u.utc_offset_minutes};
    const auto hour = std::chrono::floor<std::chrono::hours>(local - date_of(local)).count();
    h[pool.at(slot->activity_id).kind].push_back(static_cast<int>(hour));
  }
  return h;
}

}  // namespace

Service::Service(ServiceConfig cfg, EventLog log, const Clock& clock)
    : cfg_(std::move(cfg)), log_(std::move(log)), clock_(clock), state_(replay_events(log_.events(), cfg_.iml)) {}

Service::Service(ServiceConfig cfg, EventLog log, const Clock& clock, const nlohmann::json& snapshot)
    : cfg_(std::move(cfg)), log_(std::move(log)), clock_(clock), state_(load_snapshot(snapshot, log_.events(), cfg_.iml)) {
  if (state_.last_seq != log_.last_seq()) throw Error("VersionMismatch", "snapshot is ahead of the event log");
}

void Service::commit(const std::vector<PendingEvent>& events) {
  const Timestamp now = clock_.now();
  for (const auto& pending : events) {
    json payload = pending.payload;
    if (pending.kind == EventKind::ModelLabelAdded) {
      const KnnModel& m = payload.at("model") == "pre" ? state_.models.pre : state_.models.post;
      payload["instance_id"] = static_cast<std::int64_t>(m.size()) + 1;
    }
    const Event e = log_.append(pending.kind, now, std::move(payload));
    apply_event(state_, e);
  }
}

UserHistoryView Service::view_of(const UserRecord& u, std::vector<const Plan*>& plans) const {
  plans = state_.plans_of(u);
  return UserHistoryView{&u.profile, plans, u.reports, u.emotions};
}

const PlanTemplate& Service::template_or_throw(const std::string& id) const {
  auto it = cfg_.templates.find(id);
  if (it == cfg_.templates.end()) throw Error("UnknownTemplate", id);
  return it->second;
}

std::vector<PendingEvent> Service::enqueue_events(const Plan& plan) const {
  if (state_.enqueued_plans.contains(plan.plan_id)) throw Error("DuplicateEnqueue", plan.plan_id);
  const UserRecord& u = state_.user(plan.user_id);
  std::vector<PendingEvent> out;
  for (auto& n : plan_notifications(plan, cfg_.pool, hour_history(state_, u, cfg_.pool), u.utc_offset_minutes,
                                    cfg_.scheduling))
    out.push_back({EventKind::NotificationScheduled, {{"notification", n}}});
  return out;
}

std::vector<PendingEvent> Service::plan_events(const UserRecord& u, const PlanTemplate& tpl, Date week_start,
                                               std::vector<PendingEvent> events, Plan* out_plan) const {
  std::vector<const Plan*> plans;
  const UserHistoryView view = view_of(u, plans);
  const FrequencyTable freq =
      frequency_stats(view.plans, view.reports, week_start - std::chrono::days{1}, cfg_.adherence());
  const auto number = static_cast<std::uint64_t>(state_.plans.size()) + 1;
  Plan plan = compose_weekly_plan("p" + std::to_string(number), u.profile, tpl, cfg_.pool, state_.clusters, freq,
                                  week_start, mix_seed(cfg_.seed, number), cfg_.planning);
  events.push_back({EventKind::PlanAssigned, {{"plan", plan}}});
  // The notification builder needs the plan to exist in the state; build the
  // payloads directly from the composed plan instead.
  for (auto& n : plan_notifications(plan, cfg_.pool, hour_history(state_, u, cfg_.pool), u.utc_offset_minutes,
                                    cfg_.scheduling))
    events.push_back({EventKind::NotificationScheduled, {{"notification", n}}});
  if (out_plan != nullptr) *out_plan = std::move(plan);
  return events;
}

RegistrationResult Service::register_user(const RawProfile& raw, std::int64_t chat_id, std::string display_name,
                                          int utc_offset_minutes) {
  UserProfile profile;
  try {
    profile = validate_profile(raw, cfg_.vocabulary);
  } catch (const Error& e) {
    throw Error("ValidationError", e.code() + ": " + e.what());
  }
  if (utc_offset_minutes < -14 * 60 || utc_offset_minutes > 14 * 60) throw Error("ValidationError", "utc_offset_minutes");
  std::unique_lock lock(mutex_);
  if (state_.chats.contains(chat_id)) throw Error("DuplicateChat", std::to_string(chat_id));
  if (state_.users.contains(profile.user_id)) throw Error("DuplicateUser", profile.user_id);
  const Prediction suggestion = coachme::pre_predict(state_.models, profile);
  if (display_name.empty()) display_name = profile.user_id;
  commit({{EventKind::UserRegistered,
           {{"profile", profile},
            {"chat_id", chat_id},
            {"display_name", display_name},
            {"utc_offset_minutes", utc_offset_minutes},
            {"suggestion", suggestion}}}});
  return {profile.user_id, suggestion};
}

Plan Service::assign_plan(const std::string& user_id, const std::string& template_id, Date week_start) {
  std::unique_lock lock(mutex_);
  const UserRecord& u = state_.user(user_id);
  const PlanTemplate& tpl = template_or_throw(template_id);
  Plan plan;
  auto events = plan_events(u, tpl, week_start, {}, &plan);
  // The caregiver's choice labels the pre-model whenever it differs from the
  // template this user was last labeled with (the first assignment always does).
  if (last_pre_label(u) != template_id)
    events.push_back({EventKind::ModelLabelAdded,
                      label_payload({ModelKind::Pre, user_id, encode_profile(u.profile), template_id,
                                     InstanceSource::CaregiverAssignment, clock_.now()})});
  commit(events);
  return plan;
}

RefinementResult Service::refine_plan(const std::string& user_id, const std::string& refined_template_id, Date as_of) {
  std::unique_lock lock(mutex_);
  const UserRecord& u = state_.user(user_id);
  if (u.plan_ids.empty()) throw Error("NoAssignedPlan", user_id);
  const PlanTemplate& tpl = template_or_throw(refined_template_id);
  std::vector<const Plan*> plans;
  const auto labels = record_refinement(view_of(u, plans), refined_template_id, as_of, clock_.now(), cfg_.adherence());

  std::vector<PendingEvent> events;
  events.push_back({EventKind::PlanRefined,
                    {{"user_id", user_id},
                     {"previous_plan_id", u.plan_ids.back()},
                     {"refined_template_id", refined_template_id},
                     {"as_of", format_date(as_of)}}});
  for (const auto& l : labels) events.push_back({EventKind::ModelLabelAdded, label_payload(l)});
  RefinementResult result;
  events = plan_events(u, tpl, as_of + std::chrono::days{1}, std::move(events), &result.plan);
  const std::size_t labels_before = u.labels.size();
  commit(events);
  const UserRecord& after = state_.user(user_id);
  result.labels.assign(after.labels.begin() + static_cast<std::ptrdiff_t>(labels_before), after.labels.end());
  return result;
}

std::vector<ScheduledNotification> Service::enqueue_plan(const std::string& plan_id) {
  std::unique_lock lock(mutex_);
  auto it = state_.plans.find(plan_id);
  if (it == state_.plans.end()) throw Error("UnknownPlan", plan_id);
  const auto events = enqueue_events(it->second);
  commit(events);
  std::vector<ScheduledNotification> out;
  for (const auto& e : events) out.push_back(e.payload.at("notification").get<ScheduledNotification>());
  return out;
}

Prediction Service::post_predict_locked(const UserRecord& u, Date as_of) const {
  std::vector<const Plan*> plans;
  return coachme::post_predict(state_.models, view_of(u, plans), as_of, cfg_.adherence());
}

Prediction Service::pre_predict(const UserProfile& profile) const {
  std::shared_lock lock(mutex_);
  return coachme::pre_predict(state_.models, profile);
}

Prediction Service::post_predict(const std::string& user_id, Date as_of) const {
  std::shared_lock lock(mutex_);
  return post_predict_locked(state_.user(user_id), as_of);
}

std::vector<RankingRow> Service::ranking(Date as_of) const {
  std::shared_lock lock(mutex_);
  std::vector<RankingRow> rows;
  for (const auto& [id, u] : state_.users) {
    std::vector<const Plan*> plans;
    const UserHistoryView view = view_of(u, plans);
    const ComplianceWindow w = build_window(id, view.plans, view.reports, as_of, cfg_.adherence().window_days);
    RankingRow row;
    row.user_id = id;
    row.display_name = u.display_name;
    row.compliance_score = compliance_score(w);
    row.predicted = coachme::post_predict(state_.models, view, as_of, cfg_.adherence());
    try {
      row.trend = trend(w, cfg_.adherence().trend_band);
    } catch (const Error&) {
    }
    for (const auto& r : u.reports)
      if (!row.last_report_at || r.reported_at > *row.last_report_at) row.last_report_at = r.reported_at;
    rows.push_back(std::move(row));
  }
  // Users without data go last in either direction; ties by user_id.
  const bool asc = cfg_.ranking_ascending;
  std::stable_sort(rows.begin(), rows.end(), [asc](const RankingRow& a, const RankingRow& b) {
    if (a.compliance_score.has_value() != b.compliance_score.has_value()) return a.compliance_score.has_value();
    if (a.compliance_score && *a.compliance_score != *b.compliance_score)
      return asc ? *a.compliance_score < *b.compliance_score : *a.compliance_score > *b.compliance_score;
    return a.user_id < b.user_id;
  });
  return rows;
}

std::vector<OutboundMessage> Service::broadcast(const std::string& text, const std::string& filter) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw Error("EmptyBroadcast", "broadcast text is empty");
  std::unique_lock lock(mutex_);
  const Date as_of = today();
  std::vector<std::int64_t> chats;
  if (filter == "all") {
    for (const auto& [id, u] : state_.users) chats.push_back(u.chat_id);
  } else if (filter.starts_with("type:")) {
    const UserType wanted = parse_user_type(filter.substr(5));
    for (const auto& [id, u] : state_.users)
      if (post_predict_locked(u, as_of).label == to_string(wanted)) chats.push_back(u.chat_id);
  } else if (filter.starts_with("user:")) {
    chats.push_back(state_.user(filter.substr(5)).chat_id);
  } else {
    throw Error("ValidationError", "unknown broadcast filter: " + filter);
  }
  commit({{EventKind::BroadcastSent, {{"text", text}, {"filter", filter}, {"chat_ids", chats}}}});
  std::vector<OutboundMessage> out;
  for (auto chat : chats) out.push_back({chat, text, {}});
  return out;
}

nlohmann::json Service::user_detail(const std::string& user_id, Date as_of) const {
  std::shared_lock lock(mutex_);
  const UserRecord& u = state_.user(user_id);
  std::vector<const Plan*> plans;
  const UserHistoryView view = view_of(u, plans);
  const ComplianceWindow w = build_window(user_id, view.plans, view.reports, as_of, cfg_.adherence().window_days);

  json detail;
  detail["profile"] = u.profile;
  detail["chat_id"] = u.chat_id;
  detail["display_name"] = u.display_name;
  detail["registered_at"] = format_timestamp(u.registered_at);
  detail["plan_ids"] = u.plan_ids;
  if (!plans.empty()) {
    detail["latest_plan"] = *plans.back();
    detail["feedback"] = feedback_summary(*plans.back(), u.reports, cfg_.pool);
  } else {
    detail["latest_plan"] = nullptr;
    detail["feedback"] = nullptr;
  }
  detail["daily_scores"] = w.daily_scores;
  if (auto s = compliance_score(w))
    detail["compliance_score"] = *s;
  else
    detail["compliance_score"] = nullptr;
  detail["report_count"] = w.report_count;
  try {
    const Trend t = trend(w, cfg_.adherence().trend_band);
    detail["trend"] = {{"kind", to_string(t.kind)}, {"slope", t.slope}};
  } catch (const Error&) {
    detail["trend"] = nullptr;
  }
  detail["emotions"] = u.emotions;
  detail["prediction"] = coachme::post_predict(state_.models, view, as_of, cfg_.adherence());
  detail["registration_suggestion"] = u.registration_suggestion;
  json trail = json::array();
  for (const auto& l : u.labels)
    trail.push_back({{"model", to_string(l.model)},
                     {"instance_id", l.instance_id},
                     {"label", l.label},
                     {"source", to_string(l.source)},
                     {"at", format_timestamp(l.at)}});
  detail["label_trail"] = trail;
  json refinements = json::array();
  for (const auto& r : u.refinements)
    refinements.push_back({{"previous_plan_id", r.previous_plan_id},
                           {"refined_template_id", r.refined_template_id},
                           {"as_of", format_date(r.as_of)},
                           {"at", format_timestamp(r.at)}});
  detail["refinements"] = refinements;
  detail["snapshot_version"] = state_.last_seq;
  return detail;
}

std::vector<ActivityCluster> Service::proposed_clusters(std::optional<double> threshold) const {
  return propose_clusters(cfg_.pool, threshold.value_or(cfg_.planning.cluster_threshold));
}

std::vector<ActivityCluster> Service::confirm_clusters(const std::vector<ClusterEdit>& edits) {
  auto confirmed = coachme::confirm_clusters(proposed_clusters(), edits, cfg_.pool);
  std::unique_lock lock(mutex_);
  commit({{EventKind::ClusterConfirmed, {{"clusters", confirmed}}}});
  return confirmed;
}

std::vector<Suggestion> Service::suggestions(const std::string& user_id, int n, Date as_of, std::uint64_t seed) const {
  std::shared_lock lock(mutex_);
  const UserRecord& u = state_.user(user_id);
  std::vector<const Plan*> plans;
  const UserHistoryView view = view_of(u, plans);
  const FrequencyTable freq = frequency_stats(view.plans, view.reports, as_of, cfg_.adherence());
  return generate_suggestions(u.profile, cfg_.pool, freq, n, seed, cfg_.planning.epsilon, clock_.now());
}

std::vector<OutboundMessage> Service::bot_update(std::string_view wire) {
  const BotUpdate update = parse_update(wire, cfg_.planning.slots_per_day);
  std::unique_lock lock(mutex_);
  const std::int64_t chat = update.chat_id();
  if (auto it = seen_updates_.find(chat); it != seen_updates_.end() && update.update_id <= it->second) return {};
  Effects fx = handle_update(state_, update, cfg_.pool, cfg_.corpus, clock_.now());
  commit(fx.events);
  if (state_.chats.contains(chat)) {
    auto& seen = seen_updates_[chat];
    seen = std::max(seen, update.update_id);
  }
  return std::move(fx.messages);
}

DispatchResult Service::collect_due(Timestamp now) {
  std::unique_lock lock(mutex_);
  const DueSplit split = select_due(state_.notifications, now, cfg_.scheduling);
  std::vector<PendingEvent> events;
  for (const auto& id : split.expire) events.push_back({EventKind::NotificationExpired, {{"notification_id", id}}});
  for (const auto& id : split.dispatch) events.push_back({EventKind::NotificationDispatched, {{"notification_id", id}}});
  commit(events);

  DispatchResult result;
  result.expired = split.expire;
  for (const auto& id : split.dispatch) {
    const ScheduledNotification& n = state_.notifications.at(id);
    result.dispatched.push_back(n);
    const UserRecord& u = state_.user(n.user_id);
    result.messages.push_back(render_reminder(n, state_.plans.at(n.plan_id), u.chat_id, cfg_.pool, cfg_.corpus));
  }
  return result;
}

State Service::snapshot_state() const {
  std::shared_lock lock(mutex_);
  return state_;
}

std::int64_t Service::version() const {
  std::shared_lock lock(mutex_);
  return state_.last_seq;
}

std::string Service::log_bytes() const {
  std::shared_lock lock(mutex_);
  return log_.bytes();
}

nlohmann::json ranking_row_to_json(const RankingRow& row) {
  json j{{"user_id", row.user_id}, {"display_name", row.display_name}, {"predicted", row.predicted}};
  j["compliance_score"] = row.compliance_score ? json(*row.compliance_score) : json(nullptr);
  j["trend"] = row.trend ? json{{"kind", to_string(row.trend->kind)}, {"slope", row.trend->slope}} : json(nullptr);
  j["last_report_at"] = row.last_report_at ? json(format_timestamp(*row.last_report_at)) : json(nullptr);
  return j;
}

}  // namespace coachme
