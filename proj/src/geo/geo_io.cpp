#include "lur/geo_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "lur/csv.hpp"

namespace lur::geo {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<double> optional_number(const json& props, const char* key) {
  if (!props.is_object()) return std::nullopt;
  auto it = props.find(key);
  if (it == props.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw DomainError(fmt::format("property '{}' is not a number", key));
  const double v = it->get<double>();
  if (!std::isfinite(v) || v < 0.0) throw DomainError(fmt::format("property '{}' must be finite and >= 0", key));
  return v;
}

std::vector<PlanarPoint> read_line(const json& coords, GeoPoint origin) {
  if (!coords.is_array()) throw DomainError("coordinates is not an array");
  std::vector<PlanarPoint> pts;
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
      throw DomainError("position is not [lon, lat]");
    const PlanarPoint p = project(GeoPoint{c[1].get<double>(), c[0].get<double>()}, origin);
    if (pts.empty() || !(pts.back() == p)) pts.push_back(p);
  }
  if (pts.size() < 2) throw DomainError("line has fewer than 2 distinct vertices");
  return pts;
}

}  // namespace

RoadClass RoadClassMap::classify(std::string_view road_class) const {
  std::string key = lower(road_class);
  if (key.ends_with("_link")) key.resize(key.size() - 5);
  return major.contains(key) ? RoadClass::Major : RoadClass::Other;
}

RoadLoadResult parse_roads_geojson(std::string_view text, GeoPoint origin, const RoadClassMap& classes) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DomainError(fmt::format("roads GeoJSON: {}", e.what()));
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array())
    throw DomainError("roads GeoJSON: root must be a FeatureCollection with a features array");

  RoadLoadResult out;
  const auto& features = doc["features"];
  out.features_in = features.size();
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    try {
      if (!f.is_object() || !f.contains("geometry") || !f["geometry"].is_object())
        throw DomainError("feature without geometry");
      const auto& geom = f["geometry"];
      const json props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : json::object();

      std::string id;
      if (f.contains("id") && !f["id"].is_null())
        id = f["id"].is_string() ? f["id"].get<std::string>() : f["id"].dump();
      else if (props.contains("id") && !props["id"].is_null())
        id = props["id"].is_string() ? props["id"].get<std::string>() : props["id"].dump();
      else
        id = std::to_string(i);

      const std::string cls = props.contains("road_class") && props["road_class"].is_string()
                                  ? props["road_class"].get<std::string>()
                                  : std::string{};
      RoadSegment proto;
      proto.road_class = classes.classify(cls);
      proto.truck_aadt = optional_number(props, "truck_aadt");
      proto.veh_aadt = optional_number(props, "veh_aadt");

      const std::string type = geom.value("type", "");
      if (type == "LineString") {
        proto.id = id;
        proto.polyline = read_line(geom.at("coordinates"), origin);
        proto.validate();
        out.segments.push_back(std::move(proto));
      } else if (type == "MultiLineString") {
        const auto& parts = geom.at("coordinates");
        if (!parts.is_array()) throw DomainError("MultiLineString coordinates is not an array");
        std::vector<RoadSegment> pieces;
        for (std::size_t k = 0; k < parts.size(); ++k) {
          RoadSegment seg = proto;
          seg.id = fmt::format("{}#{}", id, k);
          seg.polyline = read_line(parts[k], origin);
          seg.validate();
          pieces.push_back(std::move(seg));
        }
        for (auto& p : pieces) out.segments.push_back(std::move(p));
      } else {
        throw DomainError(fmt::format("unsupported geometry type '{}'", type));
      }
    } catch (const DomainError& e) {
      out.rejected.push_back({i, e.what()});
    } catch (const json::exception& e) {
      out.rejected.push_back({i, e.what()});
    }
  }
  return out;
}

RoadLoadResult load_roads_geojson(const std::filesystem::path& path, GeoPoint origin, const RoadClassMap& classes) {
  return parse_roads_geojson(slurp(path), origin, classes);
}

RasterGrid parse_esri_ascii(std::string_view text) {
  std::istringstream in{std::string(text)};
  RasterGrid grid;
  std::optional<double> xll, yll;
  bool x_center = false;
  bool y_center = false;
  bool have_cols = false, have_rows = false, have_cell = false;

  // Header lines are "KEY value"; the first line starting with a number
  // begins the data block.
  std::string token;
  std::streampos data_start = in.tellg();
  while (in >> token) {
    const std::string key = lower(token);
    const bool numeric = !token.empty() && (std::isdigit(static_cast<unsigned char>(token[0])) || token[0] == '-' ||
                                            token[0] == '+' || token[0] == '.');
    if (numeric) break;
    std::string value;
    if (!(in >> value)) throw DomainError(fmt::format("ESRI grid: header key '{}' without value", token));
    const auto number = csv::parse_optional_double(value);
    if (!number) throw DomainError(fmt::format("ESRI grid: bad value for '{}'", token));
    if (key == "ncols") {
      grid.n_cols = static_cast<std::size_t>(*number);
      have_cols = true;
    } else if (key == "nrows") {
      grid.n_rows = static_cast<std::size_t>(*number);
      have_rows = true;
    } else if (key == "xllcorner" || key == "xllcenter") {
      xll = *number;
      x_center = key == "xllcenter";
    } else if (key == "yllcorner" || key == "yllcenter") {
      yll = *number;
      y_center = key == "yllcenter";
    } else if (key == "cellsize") {
      grid.cell_size = *number;
      have_cell = true;
    } else if (key == "nodata_value") {
      grid.nodata = *number;
    } else {
      throw DomainError(fmt::format("ESRI grid: unknown header key '{}'", token));
    }
    data_start = in.tellg();
  }
  if (!have_cols || !have_rows || !have_cell || !xll || !yll)
    throw DomainError("ESRI grid: header must define ncols, nrows, xll*, yll*, cellsize");

  grid.origin = {*xll - (x_center ? 0.5 * grid.cell_size : 0.0), *yll - (y_center ? 0.5 * grid.cell_size : 0.0)};
  in.clear();
  in.seekg(data_start);
  grid.values.reserve(grid.n_rows * grid.n_cols);
  while (in >> token) {
    const auto v = csv::parse_optional_double(token);
    if (!v) throw DomainError(fmt::format("ESRI grid: bad cell value '{}'", token));
    grid.values.push_back(*v);
  }
  if (grid.values.size() != grid.n_rows * grid.n_cols)
    throw DomainError(fmt::format("ESRI grid: expected {} values, found {}", grid.n_rows * grid.n_cols,
                                  grid.values.size()));
  grid.validate();
  return grid;
}

RasterGrid read_esri_ascii(const std::filesystem::path& path) { return parse_esri_ascii(slurp(path)); }

void write_esri_ascii(const std::filesystem::path& path, const RasterGrid& grid) {
  grid.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PipelineError(fmt::format("cannot write '{}'", path.string()));
  out << "ncols " << grid.n_cols << '\n'
      << "nrows " << grid.n_rows << '\n'
      << "xllcorner " << csv::format_number(grid.origin.x) << '\n'
      << "yllcorner " << csv::format_number(grid.origin.y) << '\n'
      << "cellsize " << csv::format_number(grid.cell_size) << '\n'
      << "NODATA_value " << csv::format_number(grid.nodata) << '\n';
  for (std::size_t r = 0; r < grid.n_rows; ++r) {
    for (std::size_t c = 0; c < grid.n_cols; ++c) {
      if (c) out << ' ';
      const double v = grid.at(r, c);
      out << csv::format_number(std::isfinite(v) ? v : grid.nodata);
    }
    out << '\n';
  }
}

}  // namespace lur::geo
