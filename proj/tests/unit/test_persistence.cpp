#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coachme/json_io.hpp"
#include "coachme/persistence.hpp"
#include "scenario.hpp"

using namespace testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("coachme-test-" + name + "-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json broadcast_payload(const std::string& text) {
  return json{{"text", text}, {"filter", "all"}, {"chat_ids", json::array()}};
}

std::string model_bytes(const State& s) {
  return export_model(s.models.pre).dump() + export_model(s.models.post).dump();
}

}  // namespace

TEST_CASE("appends are numbered from one without gaps") {
  auto log = EventLog::in_memory();
  const auto first = log.append(EventKind::BroadcastSent, at("2025-03-03T00:00:00Z"), broadcast_payload("hi"));
  CHECK(first.seq == 1);
  for (int i = 0; i < 9999; ++i) log.append(EventKind::BroadcastSent, at("2025-03-03T00:00:00Z"), broadcast_payload("x"));
  REQUIRE(log.last_seq() == 10000);
  for (std::size_t i = 0; i < log.events().size(); ++i) CHECK(log.events()[i].seq == static_cast<std::int64_t>(i + 1));
}

TEST_CASE("invalid payloads are rejected and leave the log unchanged") {
  auto log = EventLog::in_memory();
  log.append(EventKind::BroadcastSent, at("2025-03-03T00:00:00Z"), broadcast_payload("hi"));
  const std::string before = log.bytes();
  CHECK(error_code([&] { log.append(EventKind::PlanAssigned, {}, json{{"plan", 3}}); }) == "PayloadInvalid");
  CHECK(error_code([&] { log.append(EventKind::UserRegistered, {}, json::array()); }) == "PayloadInvalid");
  CHECK(log.bytes() == before);
  CHECK(log.last_seq() == 1);
}

TEST_CASE("event lines round-trip") {
  const Event e{7, at("2025-03-03T10:00:00Z"), EventKind::BroadcastSent, broadcast_payload("hello")};
  const std::string line = serialize_event(e);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(parse_event_line(line, 7) == e);
  CHECK(error_code([&] { parse_event_line(line, 8); }) == "CorruptLine");
  CHECK(error_code([&] { parse_event_line(line.substr(0, line.size() / 2), 7); }) == "CorruptLine");
  auto j = json::parse(line);
  j["schema_version"] = 2;
  CHECK(error_code([&] { parse_event_line(j.dump(), 7); }) == "VersionMismatch");
}

TEST_CASE("empty log replays to an empty state") {
  std::istringstream in("");
  const State s = replay(in, {});
  CHECK(s.last_seq == 0);
  CHECK(s == State(ImlConfig{}));
}

TEST_CASE("replay reproduces the live state") {
  Harness h;
  run_scenario(h);
  const State live = h.svc->snapshot_state();
  std::istringstream in(h.svc->log_bytes());
  const State replayed = replay(in, h.svc->config().iml);
  CHECK(replayed == live);
  CHECK(state_to_json(replayed).dump() == state_to_json(live).dump());
  CHECK(model_bytes(replayed) == model_bytes(live));
  CHECK(live.models.pre.size() >= 4);
  CHECK(live.models.post.size() == 1);
}

TEST_CASE("truncated final line: strict replay fails, recovering replay stops before it") {
  Harness h;
  run_scenario(h, 3);
  std::string bytes = h.svc->log_bytes();
  const auto n = h.svc->version();
  bytes.resize(bytes.size() - 20);
  std::istringstream strict(bytes);
  CHECK(error_code([&] { replay(strict, {}); }) == "CorruptLine");
  std::istringstream lenient(bytes);
  ReplayResult r;
  const State s = replay(lenient, {}, &r, true);
  CHECK(r.corrupt_seq == n);
  CHECK(r.applied == n - 1);
  CHECK(s.last_seq == n - 1);
}

TEST_CASE("snapshots plus tail equal a full replay") {
  Harness h;
  run_scenario(h, 5);
  const State mid = h.svc->snapshot_state();
  const json snap = make_snapshot(mid);
  CHECK(load_snapshot(snap, {}, {}) == mid);

  for (int i = 0; i < 4; ++i) h.svc->broadcast("more", "all");
  h.press(11, "emotion:sad");
  const State full = h.svc->snapshot_state();
  CHECK(load_snapshot(snap, h.svc->log().events(), {}) == full);
  // Through text as well.
  CHECK(load_snapshot(json::parse(snap.dump()), h.svc->log().events(), {}) == full);

  json bad = snap;
  bad["schema_version"] = 0;
  CHECK(error_code([&] { load_snapshot(bad, {}, {}); }) == "VersionMismatch");
}

TEST_CASE("apply_event rejects contradictions") {
  State s{ImlConfig{}};
  const Event e{1, {}, EventKind::PlanRefined,
                json{{"user_id", "ghost"}, {"previous_plan_id", "p1"}, {"refined_template_id", "t"}, {"as_of", "2025-03-03"}}};
  CHECK(error_code([&] { apply_event(s, e); }) == "PayloadInvalid");
  const Event gap{5, {}, EventKind::BroadcastSent, broadcast_payload("x")};
  CHECK(error_code([&] { apply_event(s, gap); }) != "");
}

TEST_CASE("file-backed log survives reopen and a torn tail") {
  const auto dir = temp_dir("log");
  {
    auto log = EventLog::open(dir, EventLog::Durability::Flush);
    for (int i = 0; i < 5; ++i) log.append(EventKind::BroadcastSent, at("2025-03-03T00:00:00Z"), broadcast_payload("x"));
  }
  std::string whole;
  {
    auto log = EventLog::open(dir);
    CHECK(log.last_seq() == 5);
    CHECK_FALSE(log.recovered_from_corruption().has_value());
    whole = log.bytes();
  }
  {
    std::ifstream in(dir / "events.ndjson", std::ios::binary);
    CHECK(std::string(std::istreambuf_iterator<char>(in), {}) == whole);
  }
  {
    std::ofstream out(dir / "events.ndjson", std::ios::binary | std::ios::app);
    out << R"({"seq":6,"ts":"2025-03)";
  }
  {
    auto log = EventLog::open(dir);
    CHECK(log.last_seq() == 5);
    CHECK(log.recovered_from_corruption() == 6);
    log.append(EventKind::BroadcastSent, at("2025-03-03T00:00:00Z"), broadcast_payload("y"));
  }
  auto log = EventLog::open(dir);
  CHECK(log.last_seq() == 6);
  CHECK_FALSE(log.recovered_from_corruption().has_value());

  write_snapshot(dir, replay_events(log.events(), {}));
  CHECK(latest_snapshot(dir) == dir / "snapshot-6.json");
  fs::remove_all(dir);
}
