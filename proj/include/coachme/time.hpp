#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <string_view>

namespace coachme {

using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

std::string format_date(Date d);
Date parse_date(std::string_view text);

// ISO-8601 UTC, second resolution: 2025-03-10T18:00:00Z
std::string format_timestamp(Timestamp ts);
Timestamp parse_timestamp(std::string_view text);

inline Date date_of(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }

// Domain logic never reads the OS clock; it is handed one of these.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
};

class ManualClock final : public Clock {
 public:
  explicit ManualClock(Timestamp start) : now_(start.time_since_epoch().count()) {}

  Timestamp now() const override { return Timestamp{std::chrono::seconds{now_.load()}}; }
  void set(Timestamp ts) { now_.store(ts.time_since_epoch().count()); }
  void advance(std::chrono::seconds delta) { now_.fetch_add(delta.count()); }

 private:
  std::atomic<long long> now_;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  }
};

}  // namespace coachme
