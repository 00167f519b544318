#include "nowcast/timeutil.hpp"

#include <charconv>
#include <cstdio>

namespace nowcast {

namespace {

int parse_fixed(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
  if (pos + len > s.size()) throw Error("bad timestamp: " + std::string(whole));
  int v = 0;
  const char* first = s.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, v);
  if (ec != std::errc() || ptr != first + len) throw Error("bad timestamp: " + std::string(whole));
  return v;
}

void expect_char(std::string_view s, std::size_t pos, char c, std::string_view whole) {
  if (pos >= s.size() || s[pos] != c) throw Error("bad timestamp: " + std::string(whole));
}

}  // namespace

TimePoint parse_utc(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);

  const int year = parse_fixed(s, 0, 4, text);
  expect_char(s, 4, '-', text);
  const int month = parse_fixed(s, 5, 2, text);
  expect_char(s, 7, '-', text);
  const int day = parse_fixed(s, 8, 2, text);
  if (s.size() < 11 || (s[10] != 'T' && s[10] != ' ')) throw Error("bad timestamp: " + std::string(text));
  const int hour = parse_fixed(s, 11, 2, text);
  expect_char(s, 13, ':', text);
  const int minute = parse_fixed(s, 14, 2, text);
  std::size_t pos = 16;
  int second = 0;
  if (pos < s.size() && s[pos] == ':') {
    second = parse_fixed(s, pos + 1, 2, text);
    pos += 3;
  }
  const std::string_view zone = s.substr(pos);
  if (zone != "Z" && zone != "+00:00") throw Error("non-UTC timestamp: " + std::string(text));

  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 59)
    throw Error("bad timestamp: " + std::string(text));
  return sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second};
}

std::string format_utc(TimePoint t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

std::string format_compact_hour(TimePoint t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const auto h = duration_cast<hours>(t - day_point).count();
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d%02u%02uT%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<long>(h));
  return buf;
}

TimePoint floor_hour(TimePoint t) { return std::chrono::floor<std::chrono::hours>(t); }

}  // namespace nowcast
