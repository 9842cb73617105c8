#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coachme/persistence.hpp"

namespace coachme {

// Every reply text the bot sends is looked up here; nothing is generated.
enum class Intent {
  Start,
  NewPlan,
  Mood,
  Help,
  Fallback,
  NoPlanYet,
  ComplianceDone,
  ComplianceSkipped,
  AlreadyRecorded,
  NotAssigned,
  EmotionThanks,
  Reminder,
};
std::string_view to_string(Intent i);

class ResponseCorpus {
 public:
  static ResponseCorpus defaults();
  // JSON object intent -> text. Throws ValidationError if any intent is missing.
  static ResponseCorpus from_json(const nlohmann::json& j);

  const std::string& reply(Intent intent) const { return replies_.at(intent); }
  bool contains_text(const std::string& text) const;

 private:
  std::map<Intent, std::string> replies_;
};

struct Button {
  std::string label;
  std::string data;

  bool operator==(const Button&) const = default;
};

struct OutboundMessage {
  std::int64_t chat_id = 0;
  std::string text;
  std::vector<std::vector<Button>> keyboard;

  bool operator==(const OutboundMessage&) const = default;
};

inline constexpr std::size_t kMaxCallbackBytes = 64;

struct MessageUpdate {
  std::int64_t chat_id = 0;
  std::string text;
  bool operator==(const MessageUpdate&) const = default;
};

struct CallbackUpdate {
  std::int64_t chat_id = 0;
  std::string data;
  bool operator==(const CallbackUpdate&) const = default;
};

struct BotUpdate {
  std::int64_t update_id = 0;
  std::variant<MessageUpdate, CallbackUpdate> body;

  std::int64_t chat_id() const;
  bool operator==(const BotUpdate&) const = default;
};

struct ComplyCallback {
  std::string plan_id;
  Date date;
  int slot_index = 0;
  bool complied = false;
  bool operator==(const ComplyCallback&) const = default;
};

struct EmotionCallback {
  Emotion emotion = Emotion::Neutral;
  bool operator==(const EmotionCallback&) const = default;
};

using CallbackData = std::variant<ComplyCallback, EmotionCallback>;

// Grammar: "comply:<plan_id>:<date>:<slot>:<yes|no>" | "emotion:<happy|sad|angry|neutral>".
// Throws BadCallbackData, including slot >= slots_per_day.
CallbackData parse_callback_data(std::string_view data, int slots_per_day);
std::string encode_callback(const CallbackData& data);

// Throws MalformedUpdate or BadCallbackData.
BotUpdate parse_update(std::string_view wire, int slots_per_day = kDefaultSlotsPerDay);
std::string serialize_update(const BotUpdate& update);

nlohmann::ordered_json outbound_to_json(const OutboundMessage& m);
std::string serialize_outbound(const OutboundMessage& m);
OutboundMessage outbound_from_json(const nlohmann::json& j);

// Throws DateOutOfPlan.
OutboundMessage render_plan_day(const Plan& plan, Date date, std::int64_t chat_id, const ActivityPool& pool,
                                const ResponseCorpus& corpus);
OutboundMessage render_mood_keyboard(std::int64_t chat_id, const ResponseCorpus& corpus);
OutboundMessage render_reminder(const ScheduledNotification& n, const Plan& plan, std::int64_t chat_id,
                                const ActivityPool& pool, const ResponseCorpus& corpus);

struct PendingEvent {
  EventKind kind = EventKind::ComplianceReported;
  nlohmann::json payload;
};

struct Effects {
  std::vector<PendingEvent> events;
  std::vector<OutboundMessage> messages;
};

// Pure routing of one update against a state snapshot. Updates whose id is
// not above the chat's last recorded id yield no effects. Throws UnknownChat
// for commands other than /start and /help from an unbound chat.
Effects handle_update(const State& state, const BotUpdate& update, const ActivityPool& pool,
                      const ResponseCorpus& corpus, Timestamp now);

// The effective plan for a user's local date, if any.
const Plan* plan_for_day(const State& state, const UserRecord& user, Date local_date);

}  // namespace coachme
