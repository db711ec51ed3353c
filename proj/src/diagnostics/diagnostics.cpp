#include "lur/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "lur/common.hpp"
#include "lur/csv.hpp"
#include "lur/stats.hpp"

namespace lur::diagnostics {

std::vector<std::string> SiteVarianceReport::ranking() const {
  std::vector<const SiteVariance*> order;
  for (const auto& s : sites) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [](const SiteVariance* a, const SiteVariance* b) { return a->fraction > b->fraction; });
  std::vector<std::string> ids;
  for (const auto* s : order) ids.push_back(s->site_id);
  return ids;
}

SiteVarianceReport site_variance_fractions(const fusion::FusionSeries& series,
                                           std::span<const std::string> known_sites) {
  std::map<std::string, std::pair<double, std::size_t>> acc;  // Σe², n
  for (const auto& h : series.hours)
    for (const auto& e : h.residuals) {
      auto& [sum, n] = acc[e.site_id];
      sum += e.residual * e.residual;
      ++n;
    }

  SiteVarianceReport report;
  report.pollutant = series.pollutant;
  double total = 0.0;
  for (const auto& [site, v] : acc) {
    const double sse = v.first / static_cast<double>(v.second);
    report.sites.push_back({site, v.second, sse, 0.0});
    total += sse;
  }
  for (const auto& id : known_sites)
    if (!acc.contains(id)) report.excluded.push_back(id);
  std::ranges::sort(report.excluded);
  report.excluded.erase(std::unique(report.excluded.begin(), report.excluded.end()), report.excluded.end());

  if (total > 0.0) {
    for (auto& s : report.sites) s.fraction = s.sse / total;
  } else {
    report.degenerate = !report.sites.empty();
  }
  return report;
}

WindTable::WindTable(std::span<const HourlyRecord> records, std::optional<std::string> reference_site)
    : reference_(std::move(reference_site)) {
  for (const auto& r : records) {
    if (!r.wind_speed_ms || !r.wind_dir_deg) continue;
    double dir = *r.wind_dir_deg;
    if (dir == 360.0) dir = 0.0;
    if (!(dir >= 0.0 && dir < 360.0) || !(*r.wind_speed_ms >= 0.0)) continue;
    by_site_[r.site_id][r.time.hours] = {*r.wind_speed_ms, dir};
  }
}

bool WindTable::has_own_wind(const std::string& site_id) const { return by_site_.contains(site_id); }

std::optional<Wind> WindTable::lookup(const std::string& site_id, HourStamp hour) const {
  auto site = by_site_.find(site_id);
  if (site == by_site_.end() && reference_) site = by_site_.find(*reference_);
  if (site == by_site_.end()) return std::nullopt;
  const auto it = site->second.find(hour.hours);
  if (it == site->second.end()) return std::nullopt;
  return it->second;
}

void PolarOptions::validate() const {
  if (sectors < 1) throw DomainError("sectors must be >= 1");
  if (speed_edges.size() < 2) throw DomainError("speed_edges needs a calm edge and at least one band edge");
  if (!(speed_edges.front() >= 0.0)) throw DomainError("speed_edges must be non-negative");
  for (std::size_t i = 1; i < speed_edges.size(); ++i)
    if (!(speed_edges[i] > speed_edges[i - 1])) throw DomainError("speed_edges must be strictly increasing");
  if (!std::isinf(speed_edges.back())) throw DomainError("the last speed edge must be infinite");
}

std::optional<double> PolarBin::mean() const {
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::size_t sector_of(double dir_deg, std::size_t sectors) {
  if (!(dir_deg >= 0.0 && dir_deg < 360.0)) throw DomainError(fmt::format("wind direction {} outside [0, 360)", dir_deg));
  const double width = 360.0 / static_cast<double>(sectors);
  return std::min(static_cast<std::size_t>(std::floor(dir_deg / width)), sectors - 1);
}

std::size_t PolarBinTable::locate(const Wind& w, const PolarOptions& options) const {
  const auto& edges = options.speed_edges;
  if (w.speed_ms < edges.front()) return 0;
  const std::size_t bands = edges.size() - 1;
  const auto band = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), w.speed_ms) - edges.begin()) - 1;
  return 1 + sector_of(w.dir_deg, options.sectors) * bands + std::min(band, bands - 1);
}

std::optional<double> PolarBinTable::sector_mean(std::size_t sector, std::size_t* n_out) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& b : bins)
    if (!b.calm && b.sector == sector) {
      sum += b.sum;
      n += b.n;
    }
  if (n_out) *n_out = n;
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

PolarBinTable polar_bin_means(const fusion::FusionSeries& series, const WindTable& wind, const PolarOptions& options,
                              std::span<const std::string> site_ids, std::string label) {
  options.validate();
  PolarBinTable table;
  table.pollutant = series.pollutant;
  table.label = std::move(label);

  const auto& edges = options.speed_edges;
  const std::size_t bands = edges.size() - 1;
  const double width = 360.0 / static_cast<double>(options.sectors);
  PolarBin calm;
  calm.calm = true;
  calm.speed_hi_ms = edges.front();
  table.bins.push_back(calm);
  for (std::size_t s = 0; s < options.sectors; ++s)
    for (std::size_t b = 0; b < bands; ++b) {
      PolarBin bin;
      bin.sector = s;
      bin.band = b;
      bin.sector_lo_deg = static_cast<double>(s) * width;
      bin.sector_hi_deg = s + 1 == options.sectors ? 360.0 : static_cast<double>(s + 1) * width;
      bin.speed_lo_ms = edges[b];
      bin.speed_hi_ms = edges[b + 1];
      table.bins.push_back(bin);
    }

  const std::set<std::string> wanted(site_ids.begin(), site_ids.end());
  for (const auto& h : series.hours)
    for (const auto& e : h.residuals) {
      if (!wanted.empty() && !wanted.contains(e.site_id)) continue;
      const auto w = wind.lookup(e.site_id, h.hour);
      if (!w) {
        ++table.missing_wind;
        continue;
      }
      auto& bin = table.bins[table.locate(*w, options)];
      bin.sum += e.residual;
      ++bin.n;
      ++table.binned;
    }
  return table;
}

std::vector<SiteSeries> residual_timeseries(const fusion::FusionSeries& series, std::span<const std::string> site_ids,
                                            TimeWindow window, std::span<const std::string> known_sites) {
  std::set<std::string> known(known_sites.begin(), known_sites.end());
  for (const auto& h : series.hours)
    for (const auto& e : h.residuals) known.insert(e.site_id);
  for (const auto& id : site_ids)
    if (!known.contains(id)) throw DomainError(fmt::format("unknown site '{}'", id));

  std::vector<SiteSeries> out;
  for (const auto& id : site_ids) {
    SiteSeries s{id, {}};
    for (auto t = window.start; t < window.end; t = t + 1) {
      SeriesPoint p{t, std::nullopt, std::nullopt, std::nullopt};
      if (const auto* fit = series.find(t)) {
        const auto it = std::ranges::find(fit->residuals, id, &fusion::SiteResidual::site_id);
        if (it != fit->residuals.end()) {
          p.observed = it->observed;
          p.modeled = it->modeled;
          p.residual = it->residual;
        }
      }
      s.points.push_back(p);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::optional<double> max_rolling_mean(const std::map<std::int64_t, double>& hourly, TimeWindow window, int width,
                                       int min_valid) {
  std::optional<double> best;
  for (std::int64_t t = window.start.hours; t + width <= window.end.hours; ++t) {
    double sum = 0.0;
    int n = 0;
    for (auto it = hourly.lower_bound(t); it != hourly.end() && it->first < t + width; ++it) {
      sum += it->second;
      ++n;
    }
    if (n < min_valid) continue;
    const double m = sum / n;
    if (!best || m > *best) best = m;
  }
  return best;
}

std::vector<BoxStats> summary_stats(std::span<const HourlyRecord> records, TimeWindow window) {
  std::vector<BoxStats> out;
  for (auto p : kAllPollutants) {
    std::map<std::string, std::map<std::int64_t, double>> by_site;
    for (const auto& r : records) {
      if (!window.contains(r.time)) continue;
      if (const auto v = r.value(p)) by_site[r.site_id][r.time.hours] = *v;
    }
    for (const auto& [site, hourly] : by_site) {
      std::vector<double> xs;
      xs.reserve(hourly.size());
      for (const auto& [t, v] : hourly) xs.push_back(v);
      std::ranges::sort(xs);
      BoxStats b;
      b.site_id = site;
      b.pollutant = p;
      b.n = xs.size();
      b.min = xs.front();
      b.max = xs.back();
      b.p25 = stats::quantile_sorted(xs, 0.25);
      b.median = stats::quantile_sorted(xs, 0.5);
      b.p75 = stats::quantile_sorted(xs, 0.75);
      const double iqr = b.p75 - b.p25;
      const double lo_fence = b.p25 - 1.5 * iqr;
      const double hi_fence = b.p75 + 1.5 * iqr;
      b.whisker_lo = *std::ranges::find_if(xs, [&](double x) { return x >= lo_fence; });
      b.whisker_hi = *std::find_if(xs.rbegin(), xs.rend(), [&](double x) { return x <= hi_fence; });
      b.mean = stats::mean(xs);
      b.max_8h = max_rolling_mean(hourly, window);
      out.push_back(std::move(b));
    }
  }
  return out;
}

void write_site_variance_csv(const std::filesystem::path& path, std::span<const SiteVarianceReport> reports) {
  csv::Writer out(path);
  out.row({"pollutant", "site_id", "n_hours", "sse_ppb2", "fraction", "rank"});
  for (const auto& r : reports) {
    const auto ranking = r.ranking();
    for (const auto& s : r.sites) {
      const auto rank = std::ranges::find(ranking, s.site_id) - ranking.begin() + 1;
      out.row({std::string(to_string(r.pollutant)), s.site_id, std::to_string(s.n_hours), csv::format_number(s.sse),
               csv::format_number(s.fraction), std::to_string(rank)});
    }
    for (const auto& id : r.excluded)
      out.row({std::string(to_string(r.pollutant)), id, "0", "", "", ""});
  }
}

void write_polar_csv(const std::filesystem::path& path, std::span<const PolarBinTable> tables) {
  csv::Writer out(path);
  out.row({"pollutant", "site_id", "calm", "sector_lo_deg", "sector_hi_deg", "speed_lo_ms", "speed_hi_ms",
           "mean_residual_ppb", "n"});
  for (const auto& t : tables)
    for (const auto& b : t.bins)
      out.row({std::string(to_string(t.pollutant)), t.label, b.calm ? "1" : "0",
               b.calm ? "" : csv::format_number(b.sector_lo_deg), b.calm ? "" : csv::format_number(b.sector_hi_deg),
               csv::format_number(b.speed_lo_ms), csv::format_number(b.speed_hi_ms), csv::format_optional(b.mean()),
               std::to_string(b.n)});
}

void write_boxstats_csv(const std::filesystem::path& path, std::span<const BoxStats> stats) {
  csv::Writer out(path);
  out.row({"pollutant", "site_id", "n", "min", "whisker_lo", "p25", "median", "p75", "whisker_hi", "max", "mean",
           "max_8h_mean"});
  for (const auto& b : stats)
    out.row({std::string(to_string(b.pollutant)), b.site_id, std::to_string(b.n), csv::format_number(b.min),
             csv::format_number(b.whisker_lo), csv::format_number(b.p25), csv::format_number(b.median),
             csv::format_number(b.p75), csv::format_number(b.whisker_hi), csv::format_number(b.max),
             csv::format_number(b.mean), csv::format_optional(b.max_8h)});
}

void write_timeseries_csv(const std::filesystem::path& path,
                          const std::map<Pollutant, std::vector<SiteSeries>>& series) {
  csv::Writer out(path);
  out.row({"timestamp_utc", "pollutant", "site_id", "observed_ppb", "modeled_ppb", "residual_ppb"});
  for (const auto& [p, list] : series)
    for (const auto& s : list)
      for (const auto& pt : s.points)
        out.row({format_hour(pt.hour), std::string(to_string(p)), s.site_id, csv::format_optional(pt.observed),
                 csv::format_optional(pt.modeled), csv::format_optional(pt.residual)});
}

}  // namespace lur::diagnostics
