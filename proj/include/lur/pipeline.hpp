#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "lur/features.hpp"
#include "lur/geo_io.hpp"
#include "lur/records.hpp"
#include "lur/time.hpp"

namespace lur::pipeline {

inline constexpr std::string_view kVersion = "1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitStage = 3;

/// Bad configuration or input schema. Carries a machine-readable report.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what, nlohmann::json report = {})
      : std::runtime_error(what), report_(std::move(report)) {}
  [[nodiscard]] const nlohmann::json& report() const { return report_; }

 private:
  nlohmann::json report_;
};

/// A stage failed after its inputs validated.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& cause)
      : std::runtime_error(stage + ": " + cause), stage_(std::move(stage)) {}
  [[nodiscard]] const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct ForestSettings {
  std::size_t n_trees = 500;
  std::size_t min_node_size = 5;
  std::vector<std::size_t> mtry_grid;  // empty: 1..n_features, at most 25 values
  std::size_t k = 10;
  std::size_t importance_repeats = 10;
  unsigned threads = 0;  // 0: hardware concurrency; results do not depend on it
};

struct FusionSettings {
  std::size_t min_sites = 5;
  bool with_intercept = false;
};

struct DiagnosticsSettings {
  std::size_t sectors = 16;
  std::vector<double> speed_edges{0.5, 2.0, 4.0, 8.0, std::numeric_limits<double>::infinity()};
  std::optional<std::string> wind_reference_site;
  std::vector<std::string> timeseries_sites;  // empty: three largest variance shares
};

struct MappingSettings {
  double resolution_m = 500.0;
  std::optional<geo::Box> bbox_m;                  // planar, about the site centroid
  std::optional<std::array<double, 4>> bbox_deg;   // lon_min, lat_min, lon_max, lat_max
  std::vector<HourStamp> hours;
  std::optional<std::string> anchor_site;          // a cell centre lands on this site
};

/// Run configuration (JSON). Relative paths resolve against the config
/// file's directory.
struct RunConfig {
  std::filesystem::path config_path;
  std::filesystem::path sites;
  std::filesystem::path observations;
  std::filesystem::path roads;
  std::filesystem::path elevation;
  features::ElevationCrs elevation_crs = features::ElevationCrs::Geographic;
  TimeWindow window;
  int utc_offset_hours = 0;
  std::vector<Pollutant> pollutants{Pollutant::NO2, Pollutant::O3};
  std::optional<std::filesystem::path> feature_spec;
  features::FeatureConfig feature_config = features::FeatureConfig::defaults();
  features::Approach approach = features::Approach::AllPredictors;
  double completeness_min = 0.75;
  ForestSettings forest;
  FusionSettings fusion;
  DiagnosticsSettings diagnostics;
  MappingSettings mapping;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir;
};

/// Throws ValidationError on unknown keys, bad values or missing files.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

struct RowIssue {
  std::string file;
  std::size_t line = 0;
  std::string reason;
};

struct IngestReport {
  std::size_t sites_in = 0;
  std::size_t sites_accepted = 0;
  std::size_t observations_in = 0;
  std::size_t observations_accepted = 0;
  std::size_t observations_outside_window = 0;  // accepted rows, not analysed
  std::size_t road_features_in = 0;
  std::size_t road_segments = 0;
  std::vector<RowIssue> rejected;

  [[nodiscard]] std::size_t rejected_in(const std::string& file) const;
};

nlohmann::json to_json(const IngestReport& r);

/// Validated inputs. Planar coordinates are about `origin`, the centre of
/// the sites' lat/lon bounding box.
struct Dataset {
  std::vector<SensorSite> sites;      // sorted by id
  std::vector<HourlyRecord> records;  // sorted by (site, time), window only
  geo::GeoPoint origin;
  features::LandUse land_use;
  IngestReport report;

  [[nodiscard]] std::vector<std::string> site_ids() const;
  [[nodiscard]] const SensorSite& site(const std::string& id) const;
};

/// sites.csv: site_id,lat,lon
std::vector<SensorSite> read_sites(const std::filesystem::path& path, std::vector<RowIssue>& issues);

/// observations.csv: site_id,timestamp_utc,no2_ppb,o3_ppb,wind_speed_ms,wind_dir_deg.
/// Rows with an unknown site, unparsable fields, negative wind speed, a
/// direction outside [0, 360] or a repeated site-hour are rejected;
/// 360 degrees becomes 0.
std::vector<HourlyRecord> read_observations(const std::filesystem::path& path, const std::set<std::string>& sites,
                                            std::vector<RowIssue>& issues);

Dataset ingest_and_validate(const RunConfig& cfg);

// Stages. Each reads its predecessors' files from cfg.output_dir, so any
// stage can be rerun alone; run_pipeline is exactly their composition.
void stage_ingest(const RunConfig& cfg);
void stage_features(const RunConfig& cfg);
void stage_train(const RunConfig& cfg);
void stage_fuse(const RunConfig& cfg);
void stage_diagnose(const RunConfig& cfg);
void stage_map(const RunConfig& cfg);

/// All stages in order, then manifest.json.
void run_pipeline(const RunConfig& cfg);

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view data);

/// manifest.json: config hash, input checksums, seed, versions, wall-clock
/// and a checksum inventory of every other file in the output directory.
void write_manifest(const RunConfig& cfg, double wall_clock_s);

}  // namespace lur::pipeline
