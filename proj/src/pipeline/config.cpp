#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "lur/feature_config.hpp"
#include "lur/pipeline.hpp"

namespace lur::pipeline {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ValidationError(fmt::format("config: '{}' must be an object", where));
  for (const auto& [key, value] : j.items())
    if (std::ranges::find(allowed, key) == allowed.end())
      throw ValidationError(fmt::format("config: unknown key '{}' in {}", key, where));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::filesystem::path required_file(const json& j, const char* key, const std::filesystem::path& base) {
  if (!j.contains(key)) throw ValidationError(fmt::format("config: missing '{}'", key));
  const auto path = resolve(base, j.at(key).get<std::string>());
  if (!std::filesystem::is_regular_file(path))
    throw ValidationError(fmt::format("config: {} file '{}' does not exist", key, path.string()));
  return path;
}

json box_json(const geo::Box& b) { return {b.min.x, b.min.y, b.max.x, b.max.y}; }

}  // namespace

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  try {
    reject_unknown(j, "root",
                   {"sites", "observations", "roads", "elevation", "elevation_crs", "window", "utc_offset_hours",
                    "pollutants", "feature_spec", "feature_config", "approach", "completeness_min", "forest", "fusion", "diagnostics",
                    "mapping", "seed", "output_dir"});
    cfg.sites = required_file(j, "sites", base_dir);
    cfg.observations = required_file(j, "observations", base_dir);
    cfg.roads = required_file(j, "roads", base_dir);
    cfg.elevation = required_file(j, "elevation", base_dir);
    if (j.contains("elevation_crs")) {
      const auto crs = j["elevation_crs"].get<std::string>();
      if (crs == "geographic")
        cfg.elevation_crs = features::ElevationCrs::Geographic;
      else if (crs == "planar")
        cfg.elevation_crs = features::ElevationCrs::Planar;
      else
        throw ValidationError(fmt::format("config: elevation_crs must be 'geographic' or 'planar' (got '{}')", crs));
    }

    if (!j.contains("window")) throw ValidationError("config: missing 'window'");
    reject_unknown(j["window"], "window", {"start", "end"});
    cfg.window = {parse_hour(j["window"].at("start").get<std::string>()),
                  parse_hour(j["window"].at("end").get<std::string>())};
    if (cfg.window.hours() <= 0) throw ValidationError("config: window end must be after start");
    cfg.utc_offset_hours = j.value("utc_offset_hours", 0);
    if (cfg.utc_offset_hours < -14 || cfg.utc_offset_hours > 14)
      throw ValidationError("config: utc_offset_hours must be within [-14, 14]");

    if (j.contains("pollutants")) {
      cfg.pollutants.clear();
      for (const auto& p : j["pollutants"]) {
        const auto pol = parse_pollutant(p.get<std::string>());
        if (std::ranges::find(cfg.pollutants, pol) == cfg.pollutants.end()) cfg.pollutants.push_back(pol);
      }
      if (cfg.pollutants.empty()) throw ValidationError("config: pollutants must not be empty");
    }
    if (j.contains("feature_spec") && !j["feature_spec"].is_null()) {
      cfg.feature_spec = required_file(j, "feature_spec", base_dir);
      cfg.feature_config = features::load_feature_config(*cfg.feature_spec);
    }
    // An inline recipe (as written into manifests) takes precedence.
    if (j.contains("feature_config") && !j["feature_config"].is_null())
      cfg.feature_config = features::feature_config_from_json(j["feature_config"]);
    if (j.contains("approach")) cfg.approach = features::parse_approach(j["approach"].get<int>());
    cfg.completeness_min = j.value("completeness_min", cfg.completeness_min);
    if (!(cfg.completeness_min >= 0.0 && cfg.completeness_min <= 1.0))
      throw ValidationError("config: completeness_min must be in [0, 1]");

    if (j.contains("forest")) {
      const auto& f = j["forest"];
      reject_unknown(f, "forest", {"n_trees", "min_node_size", "mtry_grid", "k", "importance_repeats", "threads"});
      cfg.forest.n_trees = f.value("n_trees", cfg.forest.n_trees);
      cfg.forest.min_node_size = f.value("min_node_size", cfg.forest.min_node_size);
      if (f.contains("mtry_grid")) cfg.forest.mtry_grid = f["mtry_grid"].get<std::vector<std::size_t>>();
      cfg.forest.k = f.value("k", cfg.forest.k);
      cfg.forest.importance_repeats = f.value("importance_repeats", cfg.forest.importance_repeats);
      cfg.forest.threads = f.value("threads", cfg.forest.threads);
      if (cfg.forest.n_trees < 1 || cfg.forest.min_node_size < 1 || cfg.forest.k < 2 ||
          cfg.forest.importance_repeats < 1)
        throw ValidationError("config: forest settings out of range");
    }
    if (j.contains("fusion")) {
      const auto& f = j["fusion"];
      reject_unknown(f, "fusion", {"min_sites", "with_intercept"});
      cfg.fusion.min_sites = f.value("min_sites", cfg.fusion.min_sites);
      cfg.fusion.with_intercept = f.value("with_intercept", cfg.fusion.with_intercept);
      if (cfg.fusion.min_sites < 1) throw ValidationError("config: fusion.min_sites must be >= 1");
    }
    if (j.contains("diagnostics")) {
      const auto& d = j["diagnostics"];
      reject_unknown(d, "diagnostics", {"sectors", "speed_edges_ms", "wind_reference_site", "timeseries_sites"});
      cfg.diagnostics.sectors = d.value("sectors", cfg.diagnostics.sectors);
      if (d.contains("speed_edges_ms")) {
        cfg.diagnostics.speed_edges = d["speed_edges_ms"].get<std::vector<double>>();
        cfg.diagnostics.speed_edges.push_back(std::numeric_limits<double>::infinity());
      }
      if (d.contains("wind_reference_site") && !d["wind_reference_site"].is_null())
        cfg.diagnostics.wind_reference_site = d["wind_reference_site"].get<std::string>();
      if (d.contains("timeseries_sites"))
        cfg.diagnostics.timeseries_sites = d["timeseries_sites"].get<std::vector<std::string>>();
    }
    if (j.contains("mapping")) {
      const auto& m = j["mapping"];
      reject_unknown(m, "mapping", {"resolution_m", "bbox_m", "bbox_deg", "hours", "anchor_site"});
      cfg.mapping.resolution_m = m.value("resolution_m", cfg.mapping.resolution_m);
      if (!(cfg.mapping.resolution_m > 0.0)) throw ValidationError("config: mapping.resolution_m must be > 0");
      if (m.contains("bbox_m") && !m["bbox_m"].is_null()) {
        const auto b = m["bbox_m"].get<std::array<double, 4>>();
        cfg.mapping.bbox_m = geo::Box{{b[0], b[1]}, {b[2], b[3]}};
      }
      if (m.contains("bbox_deg") && !m["bbox_deg"].is_null())
        cfg.mapping.bbox_deg = m["bbox_deg"].get<std::array<double, 4>>();
      if (cfg.mapping.bbox_m && cfg.mapping.bbox_deg)
        throw ValidationError("config: give at most one of mapping.bbox_m and mapping.bbox_deg");
      if (m.contains("hours"))
        for (const auto& h : m["hours"]) cfg.mapping.hours.push_back(parse_hour(h.get<std::string>()));
      if (m.contains("anchor_site") && !m["anchor_site"].is_null())
        cfg.mapping.anchor_site = m["anchor_site"].get<std::string>();
    }
    cfg.seed = j.value("seed", cfg.seed);
    cfg.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("config: {}", e.what()));
  } catch (const DomainError& e) {
    throw ValidationError(fmt::format("config: {}", e.what()));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open config '{}'", path.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("config '{}': {}", path.string(), e.what()));
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  RunConfig cfg = config_from_json(j, base);
  cfg.config_path = std::filesystem::absolute(path).lexically_normal();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json j;
  j["sites"] = cfg.sites.string();
  j["observations"] = cfg.observations.string();
  j["roads"] = cfg.roads.string();
  j["elevation"] = cfg.elevation.string();
  j["elevation_crs"] = cfg.elevation_crs == features::ElevationCrs::Geographic ? "geographic" : "planar";
  j["window"] = {{"start", format_hour(cfg.window.start)}, {"end", format_hour(cfg.window.end)}};
  j["utc_offset_hours"] = cfg.utc_offset_hours;
  j["pollutants"] = json::array();
  for (auto p : cfg.pollutants) j["pollutants"].push_back(std::string(to_string(p)));
  j["feature_spec"] = cfg.feature_spec ? json(cfg.feature_spec->string()) : json(nullptr);
  j["feature_config"] = features::to_json(cfg.feature_config);
  j["approach"] = static_cast<int>(cfg.approach);
  j["completeness_min"] = cfg.completeness_min;
  j["forest"] = {{"n_trees", cfg.forest.n_trees},
                 {"min_node_size", cfg.forest.min_node_size},
                 {"mtry_grid", cfg.forest.mtry_grid},
                 {"k", cfg.forest.k},
                 {"importance_repeats", cfg.forest.importance_repeats}};
  j["fusion"] = {{"min_sites", cfg.fusion.min_sites}, {"with_intercept", cfg.fusion.with_intercept}};
  std::vector<double> finite_edges;
  for (double e : cfg.diagnostics.speed_edges)
    if (std::isfinite(e)) finite_edges.push_back(e);
  j["diagnostics"] = {{"sectors", cfg.diagnostics.sectors},
                      {"speed_edges_ms", finite_edges},
                      {"wind_reference_site", cfg.diagnostics.wind_reference_site
                                                  ? json(*cfg.diagnostics.wind_reference_site)
                                                  : json(nullptr)},
                      {"timeseries_sites", cfg.diagnostics.timeseries_sites}};
  json hours = json::array();
  for (auto h : cfg.mapping.hours) hours.push_back(format_hour(h));
  j["mapping"] = {{"resolution_m", cfg.mapping.resolution_m},
                  {"bbox_m", cfg.mapping.bbox_m ? box_json(*cfg.mapping.bbox_m) : json(nullptr)},
                  {"bbox_deg", cfg.mapping.bbox_deg ? json(*cfg.mapping.bbox_deg) : json(nullptr)},
                  {"hours", hours},
                  {"anchor_site", cfg.mapping.anchor_site ? json(*cfg.mapping.anchor_site) : json(nullptr)}};
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir.string();
  return j;
}

}  // namespace lur::pipeline
