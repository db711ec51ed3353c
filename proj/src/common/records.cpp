#include "lur/records.hpp"

#include <fmt/format.h>

#include "lur/common.hpp"

namespace lur {

std::string_view to_string(Pollutant p) { return p == Pollutant::NO2 ? "NO2" : "O3"; }

Pollutant parse_pollutant(std::string_view text) {
  if (text == "NO2" || text == "no2") return Pollutant::NO2;
  if (text == "O3" || text == "o3") return Pollutant::O3;
  throw DomainError(fmt::format("unknown pollutant '{}'", text));
}

}  // namespace lur
