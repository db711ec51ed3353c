#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lur/common.hpp"
#include "lur/geo.hpp"
#include "lur/geo_io.hpp"
#include "lur/records.hpp"

namespace lur::features {

/// Predictor families. Names match the variable codes used in LUR
/// literature: Elevation, Lat, Long, MAJORROADLENGTH_<b>, ROADLENGTH_<b>,
/// DISTINVNEAR1, TRUCK_AADT, VEH_AADT.
enum class FeatureCode { Elevation, Lat, Long, MajorRoadLength, RoadLength, DistInvNear1, TruckAadt, VehAadt };

inline constexpr std::array<FeatureCode, 8> kAllCodes{
    FeatureCode::Elevation,    FeatureCode::Lat,       FeatureCode::Long,     FeatureCode::MajorRoadLength,
    FeatureCode::RoadLength,   FeatureCode::DistInvNear1, FeatureCode::TruckAadt, FeatureCode::VehAadt};

inline constexpr std::array<int, 7> kCandidateBuffers{24, 50, 100, 200, 300, 500, 1000};

std::string_view code_name(FeatureCode code);
FeatureCode parse_code(std::string_view name);
bool is_buffered(FeatureCode code);

enum class Sign { Positive, Negative, Any };
std::string_view sign_name(Sign s);
Sign parse_sign(std::string_view text);

struct FeatureEntry {
  FeatureCode code = FeatureCode::Elevation;
  std::optional<int> buffer_m;
  std::map<Pollutant, Sign> expected_sign;  // absent -> Any

  [[nodiscard]] std::string name() const;
  [[nodiscard]] Sign sign_for(Pollutant p) const;
};

/// Ordered list of predictors. Column order of every predictor table and
/// model follows entry order.
struct FeatureSpec {
  std::vector<FeatureEntry> entries;

  [[nodiscard]] std::vector<std::string> names() const;
  [[nodiscard]] const FeatureEntry* find(std::string_view name) const;
  [[nodiscard]] double max_buffer() const;
  /// Unique (code, buffer) pairs; buffered codes carry a positive buffer,
  /// others none.
  void validate() const;
};

enum class CorrelationMode { Absolute, Signed };

/// User-editable predictor recipe: candidate buffers, families, expected
/// signs per pollutant, road class map, and buffer correlation mode.
struct FeatureConfig {
  std::vector<int> buffers{kCandidateBuffers.begin(), kCandidateBuffers.end()};
  std::vector<FeatureCode> codes{kAllCodes.begin(), kAllCodes.end()};
  std::map<Pollutant, std::map<FeatureCode, Sign>> expected_signs;
  geo::RoadClassMap road_classes;
  CorrelationMode buffer_corr = CorrelationMode::Absolute;
  double min_distance_m = 1.0;

  /// Road lengths, traffic and DISTINVNEAR1 positive for NO2 and negative
  /// for O3; Elevation, Lat and Long unconstrained.
  static FeatureConfig defaults();

  /// Every code, buffered families expanded over every buffer.
  [[nodiscard]] FeatureSpec full_spec() const;
};

enum class ElevationCrs { Geographic, Planar };

/// Immutable geometry inputs for predictor extraction.
struct LandUse {
  geo::GeoPoint origin;
  geo::RoadNetwork roads;
  std::optional<geo::ElevationGrid> elevation;
  ElevationCrs elevation_crs = ElevationCrs::Geographic;
};

/// A point in both coordinate systems. Lat/Long always come from
/// unprojecting the planar position, so two locations with equal planar
/// coordinates produce bit-identical predictor vectors.
struct Location {
  geo::PlanarPoint planar;
  geo::GeoPoint geo;

  static Location from_geo(geo::GeoPoint g, geo::GeoPoint origin);
  static Location from_planar(geo::PlanarPoint p, geo::GeoPoint origin);
};

struct ExtractionFlags {
  bool no_major_road = false;       // DISTINVNEAR1 and AADT set to 0
  bool elevation_fallback = false;  // nodata corner, nearest valid cell used
  bool edge_effect = false;         // largest buffer leaves the road extent
};

struct PredictorVector {
  std::vector<std::string> names;
  std::vector<double> values;
  ExtractionFlags flags;

  [[nodiscard]] std::optional<double> get(std::string_view name) const;
};

/// Computes every predictor in `spec` at one location. Geometry errors
/// (elevation outside the grid, missing grid) propagate as DomainError.
PredictorVector extract_predictors(const Location& where, const LandUse& land_use, const FeatureSpec& spec,
                                   double min_distance_m = 1.0);

/// Predictor matrix with row ids and column names.
struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  Matrix values;
  std::vector<ExtractionFlags> flags;

  [[nodiscard]] std::size_t column_index(std::string_view name) const;
  [[nodiscard]] std::vector<double> column(std::string_view name) const;
  [[nodiscard]] std::size_t row_index(std::string_view id) const;
  [[nodiscard]] FeatureTable select_columns(const std::vector<std::string>& names) const;
  [[nodiscard]] FeatureTable select_rows(const std::vector<std::string>& row_ids) const;
};

FeatureTable extract_table(std::span<const std::pair<std::string, Location>> points, const LandUse& land_use,
                           const FeatureSpec& spec, double min_distance_m = 1.0);

struct SiteMean {
  std::string site_id;
  double mean_ppb = 0.0;
  std::size_t n_hours = 0;
  double completeness = 0.0;
};

struct ExcludedSite {
  std::string site_id;
  std::size_t n_hours = 0;
  double completeness = 0.0;
};

struct SiteMeans {
  Pollutant pollutant = Pollutant::NO2;
  std::vector<SiteMean> sites;  // sorted by site id
  std::vector<ExcludedSite> excluded;

  [[nodiscard]] std::vector<std::string> ids() const;
  [[nodiscard]] std::vector<double> values() const;
};

/// Per-site arithmetic mean of the available hourly values in `window`.
/// Sites whose fraction of available hours is below `completeness_min` are
/// excluded and listed. `known_sites` adds sites with no records at all to
/// the exclusion list. Throws PipelineError when no site qualifies.
SiteMeans mean_concentrations(std::span<const HourlyRecord> records, TimeWindow window, Pollutant pollutant,
                              double completeness_min, std::span<const std::string> known_sites = {});

struct BufferCorrelation {
  int buffer_m = 0;
  std::optional<double> r;  // nullopt: zero variance
};

struct FamilySelection {
  FeatureCode code = FeatureCode::MajorRoadLength;
  std::vector<BufferCorrelation> correlations;  // ascending buffer
  std::optional<int> chosen_buffer;             // nullopt: family dropped
};

struct BufferSelection {
  FeatureSpec spec;
  std::vector<FamilySelection> families;
  std::vector<FeatureCode> dropped;
};

/// For each buffered family keeps the single buffer whose Pearson
/// correlation with `targets` is largest (|r| or signed r per `mode`);
/// ties go to the smaller buffer. Families with zero variance at every
/// buffer are dropped. Unbuffered entries pass through. Needs >= 3 rows.
BufferSelection optimize_buffers(const FeatureTable& table, std::span<const double> targets, const FeatureSpec& spec,
                                 CorrelationMode mode = CorrelationMode::Absolute);

using Correlations = std::map<std::string, std::optional<double>>;

/// Pearson r of each spec column against targets.
Correlations correlate(const FeatureTable& table, std::span<const double> targets, const FeatureSpec& spec);

struct SignFilterResult {
  FeatureSpec spec;
  std::vector<std::string> removed;
  bool infeasible = false;  // every entry removed
};

/// Drops entries whose sample correlation contradicts their expected sign
/// for `pollutant`. Undefined or zero correlations never contradict.
SignFilterResult filter_by_sign(const FeatureSpec& spec, const Correlations& correlations, Pollutant pollutant);

enum class Approach { AllPredictors = 1, OptimizedBuffers = 2, SignFiltered = 3 };
Approach parse_approach(int value);

struct Selection {
  Approach approach = Approach::AllPredictors;
  FeatureSpec spec;
  Correlations correlations;  // over the full spec
  std::optional<BufferSelection> buffers;
  std::optional<SignFilterResult> signs;
  bool infeasible = false;
};

/// Applies one of the three predictor selection approaches.
Selection select_predictors(const FeatureTable& table, std::span<const double> targets, const FeatureConfig& config,
                            Pollutant pollutant, Approach approach);

}  // namespace lur::features
