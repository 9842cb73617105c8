#include "coachme/bot_gateway.hpp"

#include <algorithm>
#include <charconv>

#include "coachme/error.hpp"
#include "coachme/json_io.hpp"

namespace coachme {

namespace {

constexpr std::string_view kIntentNames[] = {
    "Start",         "NewPlan",  "Mood",          "Help",     "Fallback",      "NoPlanYet",
    "ComplianceDone", "ComplianceSkipped", "AlreadyRecorded", "NotAssigned", "EmotionThanks", "Reminder",
};

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] void bad_callback(std::string_view data) { throw Error("BadCallbackData", std::string(data)); }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

OutboundMessage reply(std::int64_t chat_id, const ResponseCorpus& corpus, Intent intent) {
  return {chat_id, corpus.reply(intent), {}};
}

Date local_date(Timestamp now, int utc_offset_minutes) {
  return date_of(now + std::chrono::minutes{utc_offset_minutes});
}

}  // namespace

std::string_view to_string(Intent i) { return kIntentNames[static_cast<int>(i)]; }

ResponseCorpus ResponseCorpus::defaults() {
  ResponseCorpus c;
  c.replies_ = {
      {Intent::Start, "Welcome to CoachMe! Your caregiver will register you and send your first weekly plan."},
      {Intent::NewPlan, "Here is your plan for today:"},
      {Intent::Mood, "How do you feel right now?"},
      {Intent::Help, "Commands: /newplan shows today's activities, /mood tells your caregiver how you feel."},
      {Intent::Fallback, "Sorry, I did not get that. Try /newplan, /mood or /help."},
      {Intent::NoPlanYet, "You have no plan for today yet. Your caregiver will send one soon."},
      {Intent::ComplianceDone, "Great job! Your activity has been recorded."},
      {Intent::ComplianceSkipped, "Thanks for letting us know. Tomorrow is a new chance."},
      {Intent::AlreadyRecorded, "This activity was already recorded."},
      {Intent::NotAssigned, "That activity is not part of your plan."},
      {Intent::EmotionThanks, "Thank you for sharing how you feel."},
      {Intent::Reminder, "Reminder, it is a good moment for:"},
  };
  return c;
}

ResponseCorpus ResponseCorpus::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("ValidationError", "corpus must be a JSON object");
  ResponseCorpus c;
  for (std::size_t i = 0; i < std::size(kIntentNames); ++i) {
    const std::string key(kIntentNames[i]);
    if (!j.contains(key) || !j.at(key).is_string()) throw Error("ValidationError", "corpus lacks intent " + key);
    c.replies_[static_cast<Intent>(i)] = j.at(key).get<std::string>();
  }
  return c;
}

bool ResponseCorpus::contains_text(const std::string& text) const {
  return std::any_of(replies_.begin(), replies_.end(), [&](const auto& kv) { return kv.second == text; });
}

std::int64_t BotUpdate::chat_id() const {
  return std::visit([](const auto& b) { return b.chat_id; }, body);
}

CallbackData parse_callback_data(std::string_view data, int slots_per_day) {
  if (data.size() > kMaxCallbackBytes) bad_callback(data);
  const auto parts = split(data, ':');
  if (parts.size() == 2 && parts[0] == "emotion") {
    for (Emotion e : kAllEmotions)
      if (lower(to_string(e)) == parts[1]) return EmotionCallback{e};
    bad_callback(data);
  }
  if (parts.size() == 5 && parts[0] == "comply") {
    ComplyCallback c;
    if (parts[1].empty()) bad_callback(data);
    c.plan_id = std::string(parts[1]);
    try {
      c.date = parse_date(parts[2]);
    } catch (const Error&) {
      bad_callback(data);
    }
    int slot = -1;
    const auto [ptr, ec] = std::from_chars(parts[3].data(), parts[3].data() + parts[3].size(), slot);
    if (ec != std::errc{} || ptr != parts[3].data() + parts[3].size() || parts[3].empty() || slot < 0 ||
        slot >= slots_per_day)
      bad_callback(data);
    c.slot_index = slot;
    if (parts[4] == "yes")
      c.complied = true;
    else if (parts[4] == "no")
      c.complied = false;
    else
      bad_callback(data);
    return c;
  }
  bad_callback(data);
}

std::string encode_callback(const CallbackData& data) {
  if (const auto* c = std::get_if<ComplyCallback>(&data))
    return "comply:" + c->plan_id + ":" + format_date(c->date) + ":" + std::to_string(c->slot_index) + ":" +
           (c->complied ? "yes" : "no");
  return "emotion:" + lower(to_string(std::get<EmotionCallback>(data).emotion));
}

BotUpdate parse_update(std::string_view wire, int slots_per_day) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(wire);
  } catch (const nlohmann::json::exception& e) {
    throw Error("MalformedUpdate", e.what());
  }
  try {
    if (!j.is_object() || !j.contains("update_id") || !j.at("update_id").is_number_integer())
      throw Error("MalformedUpdate", "update_id missing");
    const bool has_msg = j.contains("message");
    const bool has_cb = j.contains("callback_query");
    if (has_msg == has_cb) throw Error("MalformedUpdate", "exactly one of message/callback_query required");
    BotUpdate u;
    u.update_id = j.at("update_id").get<std::int64_t>();
    if (has_msg) {
      const auto& m = j.at("message");
      u.body = MessageUpdate{m.at("chat_id").get<std::int64_t>(), m.at("text").get<std::string>()};
    } else {
      const auto& c = j.at("callback_query");
      CallbackUpdate cb{c.at("chat_id").get<std::int64_t>(), c.at("data").get<std::string>()};
      (void)parse_callback_data(cb.data, slots_per_day);
      u.body = std::move(cb);
    }
    return u;
  } catch (const Error&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw Error("MalformedUpdate", e.what());
  }
}

std::string serialize_update(const BotUpdate& u) {
  nlohmann::ordered_json j;
  j["update_id"] = u.update_id;
  if (const auto* m = std::get_if<MessageUpdate>(&u.body)) {
    j["message"] = {{"chat_id", m->chat_id}, {"text", m->text}};
  } else {
    const auto& c = std::get<CallbackUpdate>(u.body);
    j["callback_query"] = {{"chat_id", c.chat_id}, {"data", c.data}};
  }
  return j.dump();
}

nlohmann::ordered_json outbound_to_json(const OutboundMessage& m) {
  nlohmann::ordered_json j;
  j["chat_id"] = m.chat_id;
  j["text"] = m.text;
  if (!m.keyboard.empty()) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : m.keyboard) {
      nlohmann::ordered_json r = nlohmann::ordered_json::array();
      for (const auto& b : row) r.push_back({{"text", b.label}, {"callback_data", b.data}});
      rows.push_back(std::move(r));
    }
    j["reply_markup"]["inline_keyboard"] = std::move(rows);
  }
  return j;
}

std::string serialize_outbound(const OutboundMessage& m) { return outbound_to_json(m).dump(); }

OutboundMessage outbound_from_json(const nlohmann::json& j) {
  OutboundMessage m;
  m.chat_id = j.at("chat_id").get<std::int64_t>();
  m.text = j.at("text").get<std::string>();
  if (j.contains("reply_markup"))
    for (const auto& row : j.at("reply_markup").at("inline_keyboard")) {
      std::vector<Button> buttons;
      for (const auto& b : row) buttons.push_back({b.at("text").get<std::string>(), b.at("callback_data").get<std::string>()});
      m.keyboard.push_back(std::move(buttons));
    }
  return m;
}

OutboundMessage render_plan_day(const Plan& plan, Date date, std::int64_t chat_id, const ActivityPool& pool,
                                const ResponseCorpus& corpus) {
  if (!plan.covers(date)) throw Error("DateOutOfPlan", format_date(date) + " not in plan " + plan.plan_id);
  OutboundMessage m{chat_id, corpus.reply(Intent::NewPlan), {}};
  for (const auto& slot : plan.slots) {
    if (slot.date != date) continue;
    const Activity& a = pool.at(slot.activity_id);
    m.text += "\n" + std::to_string(slot.slot_index + 1) + ". " + a.title;
    std::vector<Button> row;
    for (bool yes : {true, false}) {
      std::string data = encode_callback(ComplyCallback{plan.plan_id, date, slot.slot_index, yes});
      if (data.size() > kMaxCallbackBytes) throw Error("BadCallbackData", "callback data too long: " + data);
      row.push_back({yes ? "Done" : "Skipped", std::move(data)});
    }
    m.keyboard.push_back(std::move(row));
  }
  return m;
}

OutboundMessage render_mood_keyboard(std::int64_t chat_id, const ResponseCorpus& corpus) {
  OutboundMessage m{chat_id, corpus.reply(Intent::Mood), {{}}};
  for (Emotion e : kAllEmotions) m.keyboard.front().push_back({std::string(to_string(e)), encode_callback(EmotionCallback{e})});
  return m;
}

OutboundMessage render_reminder(const ScheduledNotification& n, const Plan& plan, std::int64_t chat_id,
                                const ActivityPool& pool, const ResponseCorpus& corpus) {
  const PlanSlot* slot = plan.find_slot(n.date, n.slot_index);
  if (slot == nullptr) throw Error("DateOutOfPlan", n.notification_id);
  OutboundMessage m{chat_id, corpus.reply(Intent::Reminder) + "\n" + pool.at(slot->activity_id).title, {}};
  std::vector<Button> row;
  for (bool yes : {true, false})
    row.push_back({yes ? "Done" : "Skipped", encode_callback(ComplyCallback{plan.plan_id, n.date, n.slot_index, yes})});
  m.keyboard.push_back(std::move(row));
  return m;
}

const Plan* plan_for_day(const State& state, const UserRecord& user, Date day) {
  for (auto it = user.plan_ids.rbegin(); it != user.plan_ids.rend(); ++it) {
    const Plan& p = state.plans.at(*it);
    if (p.covers(day)) return &p;
  }
  return nullptr;
}

Effects handle_update(const State& state, const BotUpdate& update, const ActivityPool& pool,
                      const ResponseCorpus& corpus, Timestamp now) {
  Effects fx;
  const std::int64_t chat = update.chat_id();
  const auto bound = state.chats.find(chat);
  const UserRecord* user = bound == state.chats.end() ? nullptr : &state.users.at(bound->second);

  if (const auto* msg = std::get_if<MessageUpdate>(&update.body)) {
    if (msg->text == "/start") {
      fx.messages.push_back(reply(chat, corpus, Intent::Start));
      return fx;
    }
    if (msg->text == "/help") {
      fx.messages.push_back(reply(chat, corpus, Intent::Help));
      return fx;
    }
    if (user == nullptr) throw Error("UnknownChat", std::to_string(chat));
    if (update.update_id <= user->last_update_id) return fx;
    if (msg->text == "/newplan") {
      const Date today = local_date(now, user->utc_offset_minutes);
      if (const Plan* plan = plan_for_day(state, *user, today))
        fx.messages.push_back(render_plan_day(*plan, today, chat, pool, corpus));
      else
        fx.messages.push_back(reply(chat, corpus, Intent::NoPlanYet));
    } else if (msg->text == "/mood") {
      fx.messages.push_back(render_mood_keyboard(chat, corpus));
    } else {
      fx.messages.push_back(reply(chat, corpus, Intent::Fallback));
    }
    return fx;
  }

  if (user == nullptr) throw Error("UnknownChat", std::to_string(chat));
  if (update.update_id <= user->last_update_id) return fx;
  const auto& cb = std::get<CallbackUpdate>(update.body);
  const int slots_per_day = user->plan_ids.empty() ? kDefaultSlotsPerDay : state.plans.at(user->plan_ids.back()).slots_per_day;
  const CallbackData data = parse_callback_data(cb.data, std::max(slots_per_day, kDefaultSlotsPerDay));

  if (const auto* e = std::get_if<EmotionCallback>(&data)) {
    EmotionReport r{user->profile.user_id, e->emotion, now};
    fx.events.push_back({EventKind::EmotionReported, {{"report", r}, {"update_id", update.update_id}}});
    fx.messages.push_back(reply(chat, corpus, Intent::EmotionThanks));
    return fx;
  }
  const auto& c = std::get<ComplyCallback>(data);
  const auto plan = state.plans.find(c.plan_id);
  if (plan == state.plans.end() || plan->second.user_id != user->profile.user_id ||
      plan->second.find_slot(c.date, c.slot_index) == nullptr) {
    fx.messages.push_back(reply(chat, corpus, Intent::NotAssigned));
    return fx;
  }
  if (state.reported.contains(SlotKey{c.plan_id, c.date, c.slot_index})) {
    fx.messages.push_back(reply(chat, corpus, Intent::AlreadyRecorded));
    return fx;
  }
  ComplianceReport r{user->profile.user_id, c.plan_id, c.date, c.slot_index, c.complied, now};
  fx.events.push_back({EventKind::ComplianceReported, {{"report", r}, {"update_id", update.update_id}}});
  fx.messages.push_back(reply(chat, corpus, c.complied ? Intent::ComplianceDone : Intent::ComplianceSkipped));
  return fx;
}

}  // namespace coachme
