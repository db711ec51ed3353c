#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lur/records.hpp"
#include "lur/time.hpp"

namespace lur::fusion {

/// Static model value C̄ per site id, ppb.
using StaticPredictions = std::map<std::string, double>;

/// Observed value per site id for one hour, ppb.
using HourObservations = std::map<std::string, double>;

enum class SkipReason { NoData, TooFewSites, Singular };

std::string_view to_string(SkipReason r);

struct FusionOptions {
  std::size_t min_sites = 5;
  bool with_intercept = false;  // sensitivity mode; the default fit passes through the origin
};

struct SiteResidual {
  std::string site_id;
  double observed = 0.0;
  double modeled = 0.0;  // a_hat * C̄ (+ intercept)
  double residual = 0.0;
  double static_ppb = 0.0;
};

struct HourFit {
  HourStamp hour;
  double a_hat = 0.0;
  std::optional<double> intercept;
  std::size_t n_sites = 0;
  bool negative_scale = false;
  std::vector<SiteResidual> residuals;  // sorted by site id
};

struct HourSkip {
  HourStamp hour;
  SkipReason reason = SkipReason::NoData;
  std::size_t n_sites = 0;
};

using FitOutcome = std::variant<HourFit, HourSkip>;

/// Least-squares scale for one hour over the sites present in both maps:
/// a = Σ y·C̄ / Σ C̄², e = y − a·C̄. With `with_intercept` an ordinary
/// straight-line fit is used instead.
FitOutcome fit_hourly_scale(const StaticPredictions& model, const HourObservations& obs,
                            const FusionOptions& options = {}, HourStamp hour = {});

struct FusionSeries {
  Pollutant pollutant = Pollutant::NO2;
  std::vector<HourFit> hours;     // ascending time
  std::vector<HourSkip> skipped;  // ascending time
  std::size_t window_hours = 0;

  [[nodiscard]] double skip_fraction() const;
  [[nodiscard]] const HourFit* find(HourStamp t) const;
  [[nodiscard]] const HourSkip* find_skip(HourStamp t) const;
};

/// Applies fit_hourly_scale to every hour of `window` independently.
FusionSeries fuse_series(const StaticPredictions& model, std::span<const HourlyRecord> records, TimeWindow window,
                         Pollutant pollutant, const FusionOptions& options = {});

/// Mean over all sites and days for each local hour of day; nullopt for
/// hours without data.
std::array<std::optional<double>, 24> diurnal_means(std::span<const HourlyRecord> records, TimeWindow window,
                                                    Pollutant pollutant, int utc_offset_hours);

// timestamp_utc,pollutant,a_hat,n_sites[,intercept][,negative_scale]
void write_fusion_csv(const std::filesystem::path& path, std::span<const FusionSeries> series);
// timestamp_utc,pollutant,site_id,observed_ppb,modeled_ppb,residual_ppb
void write_residuals_csv(const std::filesystem::path& path, std::span<const FusionSeries> series);
// timestamp_utc,pollutant,reason,n_sites
void write_skips_csv(const std::filesystem::path& path, std::span<const FusionSeries> series);

/// Rebuilds series from the three files above, one per pollutant present.
/// static_ppb is recovered only for through-origin fits with a_hat != 0.
std::vector<FusionSeries> read_series_csv(const std::filesystem::path& fusion_path,
                                          const std::filesystem::path& residuals_path,
                                          const std::filesystem::path& skips_path);

}  // namespace lur::fusion
