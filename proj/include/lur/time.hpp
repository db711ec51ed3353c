#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace lur {

/// A UTC clock hour, stored as whole hours since 1970-01-01T00:00Z.
struct HourStamp {
  std::int64_t hours = 0;

  friend auto operator<=>(const HourStamp&, const HourStamp&) = default;
  HourStamp operator+(std::int64_t h) const { return {hours + h}; }
};

/// Accepts `YYYY-MM-DDTHH`, `YYYY-MM-DDTHH:MM`, `YYYY-MM-DDTHH:MM:SS`, each
/// optionally followed by `Z`; a space may replace `T`. Minutes and seconds
/// must be zero. Throws DomainError otherwise.
HourStamp parse_hour(std::string_view text);

/// `YYYY-MM-DDTHH:00:00Z`
std::string format_hour(HourStamp t);

/// Compact form for file names: `YYYYMMDDTHH`.
std::string format_hour_compact(HourStamp t);

/// Hour of day (0..23) after shifting by a fixed UTC offset.
int local_hour_of_day(HourStamp t, int utc_offset_hours);

/// Half-open interval of hours [start, end).
struct TimeWindow {
  HourStamp start;
  HourStamp end;

  [[nodiscard]] bool contains(HourStamp t) const { return t >= start && t < end; }
  [[nodiscard]] std::int64_t hours() const { return end.hours > start.hours ? end.hours - start.hours : 0; }
};

}  // namespace lur
