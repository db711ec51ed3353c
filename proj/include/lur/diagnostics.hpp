#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lur/fusion.hpp"
#include "lur/records.hpp"

namespace lur::diagnostics {

struct SiteVariance {
  std::string site_id;
  std::size_t n_hours = 0;
  double sse = 0.0;  // mean of squared residuals, ppb²
  double fraction = 0.0;
};

struct SiteVarianceReport {
  Pollutant pollutant = Pollutant::NO2;
  std::vector<SiteVariance> sites;    // sorted by site id
  std::vector<std::string> excluded;  // known sites without residual hours
  bool degenerate = false;            // every sse is zero; fractions all 0

  /// Site ids by descending fraction, ties by id.
  [[nodiscard]] std::vector<std::string> ranking() const;
};

/// Per-site share of the unexplained variance: mean e² at the site over
/// the sum of those means.
SiteVarianceReport site_variance_fractions(const fusion::FusionSeries& series,
                                           std::span<const std::string> known_sites = {});

struct Wind {
  double speed_ms = 0.0;
  double dir_deg = 0.0;
};

/// Wind observations keyed by (site, hour); a site without any wind
/// falls back to `reference_site` when one is set.
class WindTable {
 public:
  WindTable() = default;
  WindTable(std::span<const HourlyRecord> records, std::optional<std::string> reference_site = std::nullopt);

  [[nodiscard]] std::optional<Wind> lookup(const std::string& site_id, HourStamp hour) const;
  [[nodiscard]] bool has_own_wind(const std::string& site_id) const;

 private:
  std::map<std::string, std::map<std::int64_t, Wind>> by_site_;
  std::optional<std::string> reference_;
};

struct PolarOptions {
  std::size_t sectors = 16;
  // Upper edge of the calm bin first; bands are [edges[i], edges[i+1]).
  std::vector<double> speed_edges{0.5, 2.0, 4.0, 8.0, std::numeric_limits<double>::infinity()};

  void validate() const;
};

struct PolarBin {
  bool calm = false;
  std::size_t sector = 0;  // meaningless for the calm bin
  std::size_t band = 0;
  double sector_lo_deg = 0.0;
  double sector_hi_deg = 360.0;
  double speed_lo_ms = 0.0;
  double speed_hi_ms = 0.0;
  double sum = 0.0;
  std::size_t n = 0;

  [[nodiscard]] std::optional<double> mean() const;
};

struct PolarBinTable {
  Pollutant pollutant = Pollutant::NO2;
  std::string label;          // site id or "ALL"
  std::vector<PolarBin> bins;  // calm first, then sector-major by band
  std::size_t binned = 0;
  std::size_t missing_wind = 0;

  /// Bin index for a wind observation.
  [[nodiscard]] std::size_t locate(const Wind& w, const PolarOptions& options) const;
  /// n-weighted mean over all bands of one sector (calm excluded).
  [[nodiscard]] std::optional<double> sector_mean(std::size_t sector, std::size_t* n_out = nullptr) const;
};

/// Direction sector index floor(dir / (360 / sectors)), clamped to the
/// last sector against rounding at 360.
std::size_t sector_of(double dir_deg, std::size_t sectors);

/// Residuals of the listed sites (all sites when empty) binned by the wind
/// at the same site-hour.
PolarBinTable polar_bin_means(const fusion::FusionSeries& series, const WindTable& wind, const PolarOptions& options,
                              std::span<const std::string> site_ids = {}, std::string label = "ALL");

struct SeriesPoint {
  HourStamp hour;
  std::optional<double> observed;
  std::optional<double> modeled;
  std::optional<double> residual;
};

struct SiteSeries {
  std::string site_id;
  std::vector<SeriesPoint> points;  // one per window hour, gaps explicit
};

/// Throws DomainError for a site id not in the series or `known_sites`.
std::vector<SiteSeries> residual_timeseries(const fusion::FusionSeries& series, std::span<const std::string> site_ids,
                                            TimeWindow window, std::span<const std::string> known_sites = {});

struct BoxStats {
  std::string site_id;
  Pollutant pollutant = Pollutant::NO2;
  std::size_t n = 0;
  double min = 0.0;
  double p25 = 0.0;
  double median = 0.0;
  double p75 = 0.0;
  double max = 0.0;
  double whisker_lo = 0.0;  // most extreme values within 1.5 IQR of the box
  double whisker_hi = 0.0;
  double mean = 0.0;
  std::optional<double> max_8h;  // rolling 8-hour mean, >= 6 valid hours
};

/// Boxplot statistics per site and pollutant; sites without values for a
/// pollutant are omitted. Sorted by (pollutant, site).
std::vector<BoxStats> summary_stats(std::span<const HourlyRecord> records, TimeWindow window);

/// Maximum of 8-hour rolling means over consecutive hours starting in
/// `window`. Each window needs at least `min_valid` values.
std::optional<double> max_rolling_mean(const std::map<std::int64_t, double>& hourly, TimeWindow window,
                                       int width = 8, int min_valid = 6);

void write_site_variance_csv(const std::filesystem::path& path, std::span<const SiteVarianceReport> reports);
void write_polar_csv(const std::filesystem::path& path, std::span<const PolarBinTable> tables);
void write_boxstats_csv(const std::filesystem::path& path, std::span<const BoxStats> stats);
void write_timeseries_csv(const std::filesystem::path& path,
                          const std::map<Pollutant, std::vector<SiteSeries>>& series);

}  // namespace lur::diagnostics
