#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "lur/csv.hpp"
#include "lur/pipeline.hpp"

namespace lur::pipeline {

using nlohmann::json;

std::size_t IngestReport::rejected_in(const std::string& file) const {
  return static_cast<std::size_t>(std::ranges::count(rejected, file, &RowIssue::file));
}

json to_json(const IngestReport& r) {
  json rejected = json::array();
  for (const auto& issue : r.rejected)
    rejected.push_back({{"file", issue.file}, {"line", issue.line}, {"reason", issue.reason}});
  return {{"sites", {{"rows_in", r.sites_in}, {"accepted", r.sites_accepted}, {"rejected", r.rejected_in("sites")}}},
          {"observations",
           {{"rows_in", r.observations_in},
            {"accepted", r.observations_accepted},
            {"rejected", r.rejected_in("observations")},
            {"accepted_outside_window", r.observations_outside_window}}},
          {"roads",
           {{"features_in", r.road_features_in},
            {"segments", r.road_segments},
            {"rejected", r.rejected_in("roads")}}},
          {"rejected_rows", rejected}};
}

std::vector<std::string> Dataset::site_ids() const {
  std::vector<std::string> ids;
  for (const auto& s : sites) ids.push_back(s.id);
  return ids;
}

const SensorSite& Dataset::site(const std::string& id) const {
  const auto it = std::ranges::lower_bound(sites, id, {}, &SensorSite::id);
  if (it == sites.end() || it->id != id) throw DomainError(fmt::format("unknown site '{}'", id));
  return *it;
}

namespace {

csv::Table read_table(const std::filesystem::path& path, const char* what,
                      std::initializer_list<std::string_view> columns) {
  csv::Table t;
  try {
    t = csv::read(path);
    for (auto c : columns) (void)t.require(c);
  } catch (const DomainError& e) {
    throw ValidationError(fmt::format("{} file '{}': {}", what, path.string(), e.what()),
                          {{"file", what}, {"path", path.string()}, {"error", e.what()}});
  }
  return t;
}

// True for a file holding nothing but whitespace.
bool blank_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  char c = 0;
  while (in.get(c))
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  return static_cast<bool>(std::ifstream(path));
}

}  // namespace

std::vector<SensorSite> read_sites(const std::filesystem::path& path, std::vector<RowIssue>& issues) {
  const auto t = read_table(path, "sites", {"site_id", "lat", "lon"});
  const auto c_id = t.require("site_id");
  const auto c_lat = t.require("lat");
  const auto c_lon = t.require("lon");
  std::map<std::string, SensorSite> by_id;
  for (const auto& row : t.rows) {
    try {
      if (row.fields.size() != t.header.size()) throw DomainError("wrong number of fields");
      const auto& id = row.fields[c_id];
      if (id.empty()) throw DomainError("empty site_id");
      const auto lat = csv::parse_optional_double(row.fields[c_lat]);
      const auto lon = csv::parse_optional_double(row.fields[c_lon]);
      if (!lat || !lon) throw DomainError("missing coordinate");
      const geo::GeoPoint g{*lat, *lon};
      if (!g.valid()) throw DomainError("coordinate out of range");
      if (by_id.contains(id)) throw DomainError(fmt::format("duplicate site_id '{}'", id));
      by_id.emplace(id, SensorSite{id, g});
    } catch (const DomainError& e) {
      issues.push_back({"sites", row.line, e.what()});
    }
  }
  std::vector<SensorSite> sites;
  for (auto& [id, s] : by_id) sites.push_back(std::move(s));
  return sites;
}

std::vector<HourlyRecord> read_observations(const std::filesystem::path& path, const std::set<std::string>& sites,
                                            std::vector<RowIssue>& issues) {
  if (blank_file(path)) return {};
  const auto t = read_table(path, "observations",
                            {"site_id", "timestamp_utc", "no2_ppb", "o3_ppb", "wind_speed_ms", "wind_dir_deg"});
  const auto c_id = t.require("site_id");
  const auto c_time = t.require("timestamp_utc");
  const auto c_no2 = t.require("no2_ppb");
  const auto c_o3 = t.require("o3_ppb");
  const auto c_ws = t.require("wind_speed_ms");
  const auto c_wd = t.require("wind_dir_deg");

  std::vector<HourlyRecord> out;
  std::set<std::pair<std::string, std::int64_t>> seen;
  for (const auto& row : t.rows) {
    try {
      if (row.fields.size() != t.header.size()) throw DomainError("wrong number of fields");
      HourlyRecord r;
      r.site_id = row.fields[c_id];
      if (!sites.contains(r.site_id)) throw DomainError(fmt::format("unknown site_id '{}'", r.site_id));
      r.time = parse_hour(row.fields[c_time]);
      r.no2_ppb = csv::parse_optional_double(row.fields[c_no2]);
      r.o3_ppb = csv::parse_optional_double(row.fields[c_o3]);
      r.wind_speed_ms = csv::parse_optional_double(row.fields[c_ws]);
      r.wind_dir_deg = csv::parse_optional_double(row.fields[c_wd]);
      if (r.wind_speed_ms && *r.wind_speed_ms < 0.0)
        throw DomainError(fmt::format("wind_speed_ms {} is negative", *r.wind_speed_ms));
      if (r.wind_dir_deg) {
        if (*r.wind_dir_deg < 0.0 || *r.wind_dir_deg > 360.0)
          throw DomainError(fmt::format("wind_dir_deg {} outside [0, 360]", *r.wind_dir_deg));
        if (*r.wind_dir_deg == 360.0) r.wind_dir_deg = 0.0;
      }
      if (r.wind_speed_ms.has_value() != r.wind_dir_deg.has_value())
        throw DomainError("wind_speed_ms and wind_dir_deg must be both present or both missing");
      if (!seen.insert({r.site_id, r.time.hours}).second)
        throw DomainError(fmt::format("duplicate row for site {} at {}", r.site_id, format_hour(r.time)));
      out.push_back(std::move(r));
    } catch (const DomainError& e) {
      issues.push_back({"observations", row.line, e.what()});
    }
  }
  std::ranges::sort(out, [](const HourlyRecord& a, const HourlyRecord& b) {
    return std::tie(a.site_id, a.time) < std::tie(b.site_id, b.time);
  });
  return out;
}

Dataset ingest_and_validate(const RunConfig& cfg) {
  Dataset ds;
  auto& report = ds.report;

  ds.sites = read_sites(cfg.sites, report.rejected);
  report.sites_in = ds.sites.size() + report.rejected_in("sites");
  report.sites_accepted = ds.sites.size();
  if (ds.sites.empty()) throw ValidationError("no valid sites", to_json(report));

  std::set<std::string> ids;
  std::vector<geo::GeoPoint> points;
  for (const auto& s : ds.sites) {
    ids.insert(s.id);
    points.push_back(s.location);
  }
  ds.origin = geo::bbox_centroid(points);

  auto records = read_observations(cfg.observations, ids, report.rejected);
  report.observations_in = records.size() + report.rejected_in("observations");
  report.observations_accepted = records.size();
  for (auto& r : records) {
    if (cfg.window.contains(r.time))
      ds.records.push_back(std::move(r));
    else
      ++report.observations_outside_window;
  }

  geo::RoadLoadResult roads;
  try {
    roads = geo::load_roads_geojson(cfg.roads, ds.origin, cfg.feature_config.road_classes);
  } catch (const DomainError& e) {
    throw ValidationError(fmt::format("roads file '{}': {}", cfg.roads.string(), e.what()), to_json(report));
  }
  report.road_features_in = roads.features_in;
  report.road_segments = roads.segments.size();
  for (const auto& rej : roads.rejected) report.rejected.push_back({"roads", rej.feature_index, rej.reason});

  std::optional<geo::RasterGrid> elevation;
  try {
    elevation = geo::read_esri_ascii(cfg.elevation);
  } catch (const DomainError& e) {
    throw ValidationError(fmt::format("elevation file '{}': {}", cfg.elevation.string(), e.what()), to_json(report));
  }
  ds.land_use = features::LandUse{ds.origin, geo::RoadNetwork(std::move(roads.segments)), std::move(elevation),
                                  cfg.elevation_crs};

  if (ds.records.empty()) throw ValidationError("no data in window", to_json(report));
  return ds;
}

}  // namespace lur::pipeline
