#include "coachme/time.hpp"

#include <cctype>
#include <cstdio>

#include "coachme/error.hpp"

namespace coachme {

namespace {

int read_digits(std::string_view text, std::size_t pos, std::size_t count) {
  if (pos + count > text.size()) throw Error("ValidationError", "truncated date/time: " + std::string(text));
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i])))
      throw Error("ValidationError", "bad date/time: " + std::string(text));
    value = value * 10 + (text[i] - '0');
  }
  return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
  if (pos >= text.size() || text[pos] != c) throw Error("ValidationError", "bad date/time: " + std::string(text));
}

}  // namespace

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Date parse_date(std::string_view text) {
  if (text.size() != 10) throw Error("ValidationError", "bad date: " + std::string(text));
  const int y = read_digits(text, 0, 4);
  expect_char(text, 4, '-');
  const int m = read_digits(text, 5, 2);
  expect_char(text, 7, '-');
  const int d = read_digits(text, 8, 2);
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw Error("ValidationError", "invalid date: " + std::string(text));
  return Date{ymd};
}

std::string format_timestamp(Timestamp ts) {
  const Date d = date_of(ts);
  const auto secs = (ts - d).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "T%02lld:%02lld:%02lldZ", static_cast<long long>(secs / 3600),
                static_cast<long long>((secs / 60) % 60), static_cast<long long>(secs % 60));
  return format_date(d) + buf;
}

Timestamp parse_timestamp(std::string_view text) {
  if (text.size() != 20) throw Error("ValidationError", "bad timestamp: " + std::string(text));
  const Date d = parse_date(text.substr(0, 10));
  expect_char(text, 10, 'T');
  const int h = read_digits(text, 11, 2);
  expect_char(text, 13, ':');
  const int mi = read_digits(text, 14, 2);
  expect_char(text, 16, ':');
  const int s = read_digits(text, 17, 2);
  expect_char(text, 19, 'Z');
  if (h > 23 || mi > 59 || s > 59) throw Error("ValidationError", "bad timestamp: " + std::string(text));
  return Timestamp{d} + std::chrono::hours{h} + std::chrono::minutes{mi} + std::chrono::seconds{s};
}

}  // namespace coachme
