#include "coachme/json_io.hpp"

#include "coachme/error.hpp"

namespace coachme {

namespace {

template <typename T>
T field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw Error("ValidationError", std::string("missing field ") + name);
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error("ValidationError", std::string("bad type for field ") + name);
  }
}

template <typename T>
T field_or(const json& j, const char* name, T fallback) {
  return j.contains(name) ? field<T>(j, name) : fallback;
}

}  // namespace

void to_json(json& j, const UserProfile& p) {
  j = json{{"user_id", p.user_id},
           {"age", p.age},
           {"gender", to_string(p.gender)},
           {"height_m", p.height_m},
           {"weight_kg", p.weight_kg},
           {"bmi", p.bmi},
           {"education", to_string(p.education)},
           {"health_condition", p.health_condition},
           {"preferred_activities", p.preferred_activities},
           {"preferred_foods", p.preferred_foods},
           {"resources", p.resources}};
}

void from_json(const json& j, UserProfile& p) {
  p.user_id = field<std::string>(j, "user_id");
  p.age = field<int>(j, "age");
  p.gender = parse_gender(field<std::string>(j, "gender"));
  p.height_m = field<double>(j, "height_m");
  p.weight_kg = field<double>(j, "weight_kg");
  p.bmi = field<double>(j, "bmi");
  p.education = parse_education(field<std::string>(j, "education"));
  p.health_condition = field<std::string>(j, "health_condition");
  p.preferred_activities = field<TagSet>(j, "preferred_activities");
  p.preferred_foods = field<TagSet>(j, "preferred_foods");
  p.resources = field<TagSet>(j, "resources");
}

RawProfile raw_profile_from_json(const json& j) {
  RawProfile r;
  r.user_id = field<std::string>(j, "user_id");
  r.age = field<int>(j, "age");
  r.gender = parse_gender(field<std::string>(j, "gender"));
  r.height_m = field<double>(j, "height_m");
  r.weight_kg = field<double>(j, "weight_kg");
  r.education = parse_education(field<std::string>(j, "education"));
  r.health_condition = field<std::string>(j, "health_condition");
  r.preferred_activities = field_or<TagSet>(j, "preferred_activities", {});
  r.preferred_foods = field_or<TagSet>(j, "preferred_foods", {});
  r.resources = field_or<TagSet>(j, "resources", {});
  return r;
}

json raw_profile_to_json(const RawProfile& r) {
  return json{{"user_id", r.user_id},
              {"age", r.age},
              {"gender", to_string(r.gender)},
              {"height_m", r.height_m},
              {"weight_kg", r.weight_kg},
              {"education", to_string(r.education)},
              {"health_condition", r.health_condition},
              {"preferred_activities", r.preferred_activities},
              {"preferred_foods", r.preferred_foods},
              {"resources", r.resources}};
}

void to_json(json& j, const Activity& a) {
  j = json{{"activity_id", a.activity_id}, {"kind", to_string(a.kind)},
           {"title", a.title},             {"tags", a.tags},
           {"required_resources", a.required_resources}, {"importance", a.importance}};
}

void from_json(const json& j, Activity& a) {
  a.activity_id = field<std::string>(j, "activity_id");
  a.kind = parse_activity_kind(field<std::string>(j, "kind"));
  a.title = field<std::string>(j, "title");
  a.tags = field<TagSet>(j, "tags");
  a.required_resources = field_or<TagSet>(j, "required_resources", {});
  a.importance = field<int>(j, "importance");
}

ActivityPool activity_pool_from_json(const json& j) {
  if (!j.is_array()) throw Error("ValidationError", "activity pool must be a JSON array");
  ActivityPool pool;
  for (const auto& item : j) {
    Activity a = item.get<Activity>();
    validate_activity(a);
    if (!pool.emplace(a.activity_id, a).second) throw Error("ValidationError", "duplicate activity " + a.activity_id);
  }
  return pool;
}

void to_json(json& j, const ActivityCluster& c) {
  j = json{{"cluster_id", c.cluster_id}, {"member_ids", c.member_ids}, {"confirmed", c.confirmed}};
}

void from_json(const json& j, ActivityCluster& c) {
  c.cluster_id = field<std::string>(j, "cluster_id");
  c.member_ids = field<std::set<std::string>>(j, "member_ids");
  c.confirmed = field_or<bool>(j, "confirmed", false);
}

void to_json(json& j, const PlanSlot& s) {
  j = json{{"date", format_date(s.date)},
           {"slot_index", s.slot_index},
           {"activity_id", s.activity_id},
           {"origin", to_string(s.origin)}};
}

void from_json(const json& j, PlanSlot& s) {
  s.date = parse_date(field<std::string>(j, "date"));
  s.slot_index = field<int>(j, "slot_index");
  s.activity_id = field<std::string>(j, "activity_id");
  s.origin = parse_slot_origin(field<std::string>(j, "origin"));
}

void to_json(json& j, const Plan& p) {
  j = json{{"plan_id", p.plan_id},         {"user_id", p.user_id},
           {"template_id", p.template_id}, {"week_start", format_date(p.week_start)},
           {"slots_per_day", p.slots_per_day}, {"slots", p.slots}};
}

void from_json(const json& j, Plan& p) {
  p.plan_id = field<std::string>(j, "plan_id");
  p.user_id = field<std::string>(j, "user_id");
  p.template_id = field<std::string>(j, "template_id");
  p.week_start = parse_date(field<std::string>(j, "week_start"));
  p.slots_per_day = field<int>(j, "slots_per_day");
  p.slots = field<std::vector<PlanSlot>>(j, "slots");
}

void to_json(json& j, const ComplianceReport& r) {
  j = json{{"user_id", r.user_id},       {"plan_id", r.plan_id},   {"date", format_date(r.date)},
           {"slot_index", r.slot_index}, {"complied", r.complied}, {"reported_at", format_timestamp(r.reported_at)}};
}

void from_json(const json& j, ComplianceReport& r) {
  r.user_id = field<std::string>(j, "user_id");
  r.plan_id = field<std::string>(j, "plan_id");
  r.date = parse_date(field<std::string>(j, "date"));
  r.slot_index = field<int>(j, "slot_index");
  r.complied = field<bool>(j, "complied");
  r.reported_at = parse_timestamp(field<std::string>(j, "reported_at"));
}

void to_json(json& j, const EmotionReport& r) {
  j = json{{"user_id", r.user_id}, {"emotion", to_string(r.emotion)}, {"reported_at", format_timestamp(r.reported_at)}};
}

void from_json(const json& j, EmotionReport& r) {
  r.user_id = field<std::string>(j, "user_id");
  r.emotion = parse_emotion(field<std::string>(j, "emotion"));
  r.reported_at = parse_timestamp(field<std::string>(j, "reported_at"));
}

void to_json(json& j, const ScheduledNotification& n) {
  j = json{{"notification_id", n.notification_id}, {"user_id", n.user_id},
           {"plan_id", n.plan_id},                 {"date", format_date(n.date)},
           {"slot_index", n.slot_index},           {"fire_at", format_timestamp(n.fire_at)},
           {"state", to_string(n.state)}};
}

void from_json(const json& j, ScheduledNotification& n) {
  n.notification_id = field<std::string>(j, "notification_id");
  n.user_id = field<std::string>(j, "user_id");
  n.plan_id = field<std::string>(j, "plan_id");
  n.date = parse_date(field<std::string>(j, "date"));
  n.slot_index = field<int>(j, "slot_index");
  n.fire_at = parse_timestamp(field<std::string>(j, "fire_at"));
  n.state = parse_notification_state(field<std::string>(j, "state"));
}

void to_json(json& j, const PlanTemplate& t) {
  json mix = json::object();
  for (const auto& [k, n] : t.kind_mix) mix[std::string(to_string(k))] = n;
  j = json{{"template_id", t.template_id}, {"kind_mix", mix}, {"target_clusters", t.target_clusters}, {"notes", t.notes}};
}

void from_json(const json& j, PlanTemplate& t) {
  t.template_id = field<std::string>(j, "template_id");
  t.kind_mix.clear();
  for (const auto& [k, n] : field<json>(j, "kind_mix").items()) t.kind_mix[parse_activity_kind(k)] = n.get<int>();
  t.target_clusters = field_or<std::set<std::string>>(j, "target_clusters", {});
  t.notes = field_or<std::string>(j, "notes", "");
}

void to_json(json& j, const Prediction& p) {
  j = json{{"label", p.label},
           {"confidence", p.confidence},
           {"neighbor_ids", p.neighbor_ids},
           {"status", to_string(p.status)}};
}

void to_json(json& j, const DailyScore& d) {
  j = json{{"date", format_date(d.date)}, {"assigned", d.assigned}, {"complied", d.complied}};
  if (d.assigned > 0)
    j["score"] = static_cast<double>(d.complied) / d.assigned;
  else
    j["score"] = nullptr;
}

void to_json(json& j, const FeedbackSummary& s) {
  auto totals = [](const KindTotals& t) {
    return json{{"complied", t.complied}, {"declined", t.declined}, {"unreported", t.unreported}};
  };
  json rows = json::array();
  for (const auto& r : s.rows)
    rows.push_back({{"date", format_date(r.date)},
                    {"slot_index", r.slot_index},
                    {"activity_id", r.activity_id},
                    {"kind", to_string(r.kind)},
                    {"status", to_string(r.status)}});
  json by_kind = json::object();
  for (const auto& [k, t] : s.by_kind) by_kind[std::string(to_string(k))] = totals(t);
  j = json{{"user_id", s.user_id}, {"plan_id", s.plan_id}, {"rows", rows}, {"by_kind", by_kind}, {"total", totals(s.total)}};
}

void to_json(json& j, const Suggestion& s) {
  j = json{{"user_id", s.user_id},
           {"activity_id", s.activity_id},
           {"rationale", to_string(s.rationale)},
           {"created_at", format_timestamp(s.created_at)}};
}

ClusterEdit cluster_edit_from_json(const json& j) {
  ClusterEdit e;
  const auto op = field<std::string>(j, "op");
  if (op == "move") {
    e.op = ClusterEdit::Op::Move;
    e.cluster_id = field<std::string>(j, "to");
    e.activity_ids = field<std::vector<std::string>>(j, "activity_ids");
  } else if (op == "merge") {
    e.op = ClusterEdit::Op::Merge;
    e.cluster_id = field<std::string>(j, "into");
    e.other_cluster_id = field<std::string>(j, "from");
  } else if (op == "split") {
    e.op = ClusterEdit::Op::Split;
    e.cluster_id = field<std::string>(j, "cluster_id");
    e.other_cluster_id = field<std::string>(j, "new_cluster_id");
    e.activity_ids = field<std::vector<std::string>>(j, "activity_ids");
  } else if (op == "assign") {
    e.op = ClusterEdit::Op::Assign;
    e.cluster_id = field<std::string>(j, "cluster_id");
    e.activity_ids = field<std::vector<std::string>>(j, "activity_ids");
  } else {
    throw Error("ValidationError", "unknown cluster edit op: " + op);
  }
  return e;
}

}  // namespace coachme
