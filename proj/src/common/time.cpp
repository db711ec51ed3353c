#include "lur/time.hpp"

#include <chrono>
#include <charconv>

#include <fmt/format.h>

#include "lur/common.hpp"

namespace lur {
namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  if (pos + len > text.size()) throw DomainError(fmt::format("bad timestamp '{}'", whole));
  int value = 0;
  auto first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) throw DomainError(fmt::format("bad timestamp '{}'", whole));
  return value;
}

}  // namespace

HourStamp parse_hour(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);

  if (s.size() < 13 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' '))
    throw DomainError(fmt::format("bad timestamp '{}'", text));
  const int year = parse_int(s, 0, 4, text);
  const int month = parse_int(s, 5, 2, text);
  const int day = parse_int(s, 8, 2, text);
  const int hour = parse_int(s, 11, 2, text);
  int minute = 0;
  int second = 0;
  if (s.size() == 16 || s.size() == 19) {
    if (s[13] != ':') throw DomainError(fmt::format("bad timestamp '{}'", text));
    minute = parse_int(s, 14, 2, text);
    if (s.size() == 19) {
      if (s[16] != ':') throw DomainError(fmt::format("bad timestamp '{}'", text));
      second = parse_int(s, 17, 2, text);
    }
  } else if (s.size() != 13) {
    throw DomainError(fmt::format("bad timestamp '{}'", text));
  }
  if (hour > 23) throw DomainError(fmt::format("bad timestamp '{}'", text));
  if (minute != 0 || second != 0)
    throw DomainError(fmt::format("timestamp '{}' is not on the hour", text));

  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw DomainError(fmt::format("bad calendar date in '{}'", text));
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  return {static_cast<std::int64_t>(days) * 24 + hour};
}

namespace {

std::chrono::year_month_day to_ymd(HourStamp t, int& hour) {
  std::int64_t days = t.hours / 24;
  std::int64_t h = t.hours % 24;
  if (h < 0) {
    h += 24;
    --days;
  }
  hour = static_cast<int>(h);
  return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{days}}};
}

}  // namespace

std::string format_hour(HourStamp t) {
  int hour = 0;
  const auto ymd = to_ymd(t, hour);
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:00:00Z", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hour);
}

std::string format_hour_compact(HourStamp t) {
  int hour = 0;
  const auto ymd = to_ymd(t, hour);
  return fmt::format("{:04d}{:02d}{:02d}T{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()), hour);
}

int local_hour_of_day(HourStamp t, int utc_offset_hours) {
  const std::int64_t h = (t.hours + utc_offset_hours) % 24;
  return static_cast<int>(h < 0 ? h + 24 : h);
}

}  // namespace lur
