#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "lur/geo.hpp"
#include "lur/records.hpp"
#include "lur/time.hpp"

namespace lur::pipeline {

struct FixtureOptions {
  std::uint64_t seed = 1;
  std::size_t n_sites = 31;
  TimeWindow window{parse_hour("2018-04-01T00"), parse_hour("2018-06-01T00")};
  int utc_offset_hours = -7;
  bool hourly_noise = true;  // false: y = a(l) * mean exactly, no anomalies or gaps
  bool round_values = true;  // observations to 0.001 ppb, wind to 0.1
};

struct AnomalySite {
  std::string site_id;
  std::size_t sector = 0;  // of 16; the bias applies when the site's own wind is in it and not calm
  double bias_ppb = 10.0;
};

/// Generating parameters and the true values they produce.
struct FixtureTruth {
  geo::GeoPoint origin;  // centre of the site bounding box
  std::map<Pollutant, std::map<std::string, double>> site_means;  // land-use signal + site noise
  std::map<Pollutant, std::vector<double>> scale;                 // a(l) per window hour
  std::map<Pollutant, std::string> planted_feature;               // e.g. MAJORROADLENGTH_500
  std::vector<AnomalySite> anomalies;
  std::vector<std::string> sites_without_wind;
  nlohmann::json parameters;
};

/// Desk-scale synthetic study area: a street grid of varying density,
/// major roads with traffic counts, an elevation surface on a geographic
/// grid with a nodata patch, sensor sites, and hourly NO2/O3/wind series.
struct Fixture {
  FixtureOptions options;
  std::vector<SensorSite> sites;  // sorted by id
  std::vector<HourlyRecord> records;
  std::string roads_geojson;
  geo::RasterGrid elevation;  // lon/lat coordinates
  FixtureTruth truth;
};

/// Byte-identical output for equal options.
Fixture generate_fixture(const FixtureOptions& options);

/// sites.csv, observations.csv, roads.geojson, elevation.asc, truth.json,
/// feature_spec.json and config.json (ready for `run --config`).
void write_fixture(const Fixture& fixture, const std::filesystem::path& out_dir);

nlohmann::json to_json(const FixtureTruth& truth, const TimeWindow& window);

}  // namespace lur::pipeline
