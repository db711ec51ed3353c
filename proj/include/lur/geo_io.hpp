#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lur/geo.hpp"

namespace lur::geo {

/// Maps free-form road class strings (OSM `highway` values and similar) to
/// {Major, Other}. Matching is case-insensitive; a trailing `_link` is
/// ignored.
struct RoadClassMap {
  std::set<std::string> major{"motorway", "trunk", "primary", "secondary"};

  [[nodiscard]] RoadClass classify(std::string_view road_class) const;
};

struct RejectedFeature {
  std::size_t feature_index = 0;
  std::string reason;
};

struct RoadLoadResult {
  std::vector<RoadSegment> segments;
  std::vector<RejectedFeature> rejected;
  std::size_t features_in = 0;
};

/// Parses a GeoJSON FeatureCollection of LineString / MultiLineString
/// features (lon/lat order) and projects them about `origin`. Feature
/// properties: road_class (string), truck_aadt and veh_aadt (number or
/// null). Repeated consecutive vertices are collapsed; features that still
/// have fewer than two vertices are rejected with a reason. Malformed JSON
/// or a non-FeatureCollection root throws DomainError.
RoadLoadResult parse_roads_geojson(std::string_view text, GeoPoint origin, const RoadClassMap& classes);
RoadLoadResult load_roads_geojson(const std::filesystem::path& path, GeoPoint origin, const RoadClassMap& classes);

/// ESRI ASCII grid (ncols/nrows/xllcorner|xllcenter/yllcorner|yllcenter/
/// cellsize/nodata_value header, then rows from north to south).
RasterGrid parse_esri_ascii(std::string_view text);
RasterGrid read_esri_ascii(const std::filesystem::path& path);
void write_esri_ascii(const std::filesystem::path& path, const RasterGrid& grid);

}  // namespace lur::geo
