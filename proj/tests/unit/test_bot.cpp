#include <doctest.h>

#include "coachme/bot_gateway.hpp"
#include "coachme/config.hpp"
#include "scenario.hpp"
#include "support_plans.hpp"

using namespace testing;
using nlohmann::json;

TEST_CASE("inbound grammar") {
  const BotUpdate u = parse_update(R"({"update_id":1,"message":{"chat_id":9,"text":"/newplan"}})");
  CHECK(u.update_id == 1);
  CHECK(u.chat_id() == 9);
  CHECK(std::get<MessageUpdate>(u.body).text == "/newplan");
  CHECK(parse_update(serialize_update(u)) == u);

  const BotUpdate cb = parse_update(R"({"update_id":2,"callback_query":{"chat_id":9,"data":"emotion:happy"}})");
  CHECK(std::get<CallbackUpdate>(cb.body).data == "emotion:happy");

  CHECK(error_code([] { parse_update("{"); }) == "MalformedUpdate");
  CHECK(error_code([] { parse_update(R"({"message":{"chat_id":9,"text":"x"}})"); }) == "MalformedUpdate");
  CHECK(error_code([] { parse_update(R"({"update_id":1})"); }) == "MalformedUpdate");
  CHECK(error_code([] { parse_update(R"({"update_id":1,"message":{"chat_id":"9","text":"x"}})"); }) ==
        "MalformedUpdate");
  CHECK(error_code([] { parse_update(R"({"update_id":1,"callback_query":{"chat_id":9,"data":"dance"}})"); }) ==
        "BadCallbackData");
}

TEST_CASE("callback data grammar") {
  const auto c = std::get<ComplyCallback>(parse_callback_data("comply:p1:2025-03-10:2:yes", 3));
  CHECK(c.plan_id == "p1");
  CHECK(c.date == day("2025-03-10"));
  CHECK(c.slot_index == 2);
  CHECK(c.complied);
  CHECK_FALSE(std::get<ComplyCallback>(parse_callback_data("comply:p1:2025-03-10:0:no", 3)).complied);
  CHECK(std::get<EmotionCallback>(parse_callback_data("emotion:angry", 3)).emotion == Emotion::Angry);

  for (const char* bad : {"comply:p1:2025-03-10:5:yes", "comply:p1:2025-03-10:-1:yes", "comply:p1:2025-13-10:0:yes",
                          "comply:p1:2025-03-10:0:maybe", "comply::2025-03-10:0:yes", "comply:p1:2025-03-10:0",
                          "emotion:bored", "emotion:Happy", ""})
    CHECK_MESSAGE(error_code([&] { parse_callback_data(bad, 3); }) == "BadCallbackData", bad);
  const std::string long_id(60, 'x');
  CHECK(error_code([&] { parse_callback_data("comply:" + long_id + ":2025-03-10:0:yes", 3); }) == "BadCallbackData");

  for (Emotion e : kAllEmotions) CHECK(std::get<EmotionCallback>(parse_callback_data(encode_callback(EmotionCallback{e}), 3)).emotion == e);
}

TEST_CASE("outbound wire shape") {
  OutboundMessage m{9, "Hi", {{{"Done", "comply:p1:2025-03-10:0:yes"}, {"Skipped", "comply:p1:2025-03-10:0:no"}}}};
  CHECK(serialize_outbound(m) ==
        R"({"chat_id":9,"text":"Hi","reply_markup":{"inline_keyboard":[[{"text":"Done","callback_data":"comply:p1:2025-03-10:0:yes"},{"text":"Skipped","callback_data":"comply:p1:2025-03-10:0:no"}]]}})");
  CHECK(outbound_from_json(json::parse(serialize_outbound(m))) == m);
  CHECK(serialize_outbound({9, "plain", {}}) == R"({"chat_id":9,"text":"plain"})");
}

TEST_CASE("rendering a plan day") {
  const auto pool = tiny_pool();
  const Plan plan = uniform_plan("p1", "john", day("2025-03-10"), {"d1", "p1", "w1"}, pool);
  const auto corpus = ResponseCorpus::defaults();
  const auto m = render_plan_day(plan, day("2025-03-11"), 9, pool, corpus);
  REQUIRE(m.keyboard.size() == 3);
  for (const auto& row : m.keyboard) CHECK(row.size() == 2);
  CHECK(m.text.find("1. Fruit breakfast") != std::string::npos);
  CHECK(m.text.find("3. Stretch") != std::string::npos);
  CHECK(error_code([&] { render_plan_day(plan, day("2025-03-17"), 9, pool, corpus); }) == "DateOutOfPlan");

  // Pressing Done decodes back to the exact slot.
  const BotUpdate press{5, CallbackUpdate{9, m.keyboard[1][0].data}};
  const auto parsed = parse_update(serialize_update(press));
  const auto c = std::get<ComplyCallback>(parse_callback_data(std::get<CallbackUpdate>(parsed.body).data, 3));
  CHECK(c == ComplyCallback{"p1", day("2025-03-11"), 1, true});
}

TEST_CASE("replies come from the corpus") {
  const auto corpus = ResponseCorpus::defaults();
  CHECK(corpus.contains_text(corpus.reply(Intent::Fallback)));
  json j = json::object();
  for (int i = 0; i <= static_cast<int>(Intent::Reminder); ++i) j[std::string(to_string(static_cast<Intent>(i)))] = "t";
  CHECK(ResponseCorpus::from_json(j).reply(Intent::Help) == "t");
  j.erase("Help");
  CHECK(error_code([&] { ResponseCorpus::from_json(j); }) == "ValidationError");
}

TEST_CASE("conversation through the service") {
  Harness h;
  const auto& corpus = h.svc->config().corpus;
  CHECK(h.say(50, "/start").front().text == corpus.reply(Intent::Start));
  CHECK(h.say(50, "/help").front().text == corpus.reply(Intent::Help));
  CHECK(error_code([&] { h.say(50, "/newplan"); }) == "UnknownChat");

  h.svc->register_user(john(), 50, "John");
  CHECK(h.say(50, "/newplan").front().text == corpus.reply(Intent::NoPlanYet));
  CHECK(h.say(50, "what now?").front().text == corpus.reply(Intent::Fallback));

  const Plan plan = h.svc->assign_plan("john", "baseline-v1", day("2025-03-03"));
  h.clock.set(at("2025-03-04T08:00:00Z"));
  const auto msgs = h.say(50, "/newplan");
  REQUIRE(msgs.size() == 1);
  REQUIRE(msgs[0].keyboard.size() == 3);

  const auto before = h.svc->version();
  const auto ack = h.press(50, msgs[0].keyboard[0][0].data);
  CHECK(ack.front().text == corpus.reply(Intent::ComplianceDone));
  CHECK(h.svc->version() == before + 1);
  const Event& e = h.svc->log().events().back();
  CHECK(e.kind == EventKind::ComplianceReported);
  CHECK(e.payload.at("report").at("slot_index") == 0);
  CHECK(e.payload.at("report").at("date") == "2025-03-04");

  // Same slot again, even as Skipped: no new event.
  CHECK(h.press(50, msgs[0].keyboard[0][1].data).front().text == corpus.reply(Intent::AlreadyRecorded));
  CHECK(h.svc->version() == before + 1);

  CHECK(h.press(50, msgs[0].keyboard[1][1].data).front().text == corpus.reply(Intent::ComplianceSkipped));
  CHECK(h.press(50, "comply:p99:2025-03-04:0:yes").front().text == corpus.reply(Intent::NotAssigned));
  CHECK(h.press(50, "comply:" + plan.plan_id + ":2025-03-20:0:yes").front().text == corpus.reply(Intent::NotAssigned));

  const auto mood = h.say(50, "/mood");
  CHECK(mood.front().keyboard.front().size() == 4);
  const auto n_before = h.svc->version();
  CHECK(h.press(50, "emotion:happy").front().text == corpus.reply(Intent::EmotionThanks));
  CHECK(h.svc->log().events().back().kind == EventKind::EmotionReported);
  CHECK(h.svc->version() == n_before + 1);
  CHECK(h.svc->snapshot_state().users.at("john").emotions.back().emotion == Emotion::Happy);
}

TEST_CASE("replayed update ids are ignored") {
  Harness h;
  h.svc->register_user(john(), 50);
  h.svc->assign_plan("john", "baseline-v1", day("2025-03-03"));
  const std::string wire = serialize_update({7, CallbackUpdate{50, "comply:p1:2025-03-03:0:yes"}});
  CHECK(h.svc->bot_update(wire).size() == 1);
  const auto v = h.svc->version();
  CHECK(h.svc->bot_update(wire).empty());
  CHECK(h.svc->bot_update(serialize_update({6, CallbackUpdate{50, "emotion:sad"}})).empty());
  CHECK(h.svc->version() == v);

  // The persisted high-water mark also filters after a restart from the log.
  Service again(h.svc->config(), EventLog::in_memory(), h.clock);
  State s = h.svc->snapshot_state();
  const auto fx = handle_update(s, parse_update(wire), h.svc->config().pool, h.svc->config().corpus, h.clock.now());
  CHECK(fx.events.empty());
  CHECK(fx.messages.empty());
}

TEST_CASE("the user's local date picks the plan day") {
  Harness h;
  h.svc->register_user(john(), 50, "John", 10 * 60);  // UTC+10
  h.svc->assign_plan("john", "baseline-v1", day("2025-03-03"));
  h.clock.set(at("2025-03-03T20:00:00Z"));  // already the 4th locally
  const auto msgs = h.say(50, "/newplan");
  CHECK(msgs.front().keyboard[0][0].data == "comply:p1:2025-03-04:0:yes");
}
