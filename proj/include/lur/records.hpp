#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "lur/geo.hpp"
#include "lur/time.hpp"

namespace lur {

enum class Pollutant { NO2, O3 };

inline constexpr std::array<Pollutant, 2> kAllPollutants{Pollutant::NO2, Pollutant::O3};

std::string_view to_string(Pollutant p);
/// Accepts "NO2"/"no2" and "O3"/"o3". Throws DomainError otherwise.
Pollutant parse_pollutant(std::string_view text);

struct SensorSite {
  std::string id;
  geo::GeoPoint location;
};

/// One site-hour of measurements; any field may be missing.
struct HourlyRecord {
  std::string site_id;
  HourStamp time;
  std::optional<double> no2_ppb;
  std::optional<double> o3_ppb;
  std::optional<double> wind_speed_ms;
  std::optional<double> wind_dir_deg;

  [[nodiscard]] std::optional<double> value(Pollutant p) const { return p == Pollutant::NO2 ? no2_ppb : o3_ppb; }
};

}  // namespace lur
