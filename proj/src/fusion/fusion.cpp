#include "lur/fusion.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lur/common.hpp"
#include "lur/csv.hpp"

namespace lur::fusion {

std::string_view to_string(SkipReason r) {
  switch (r) {
    case SkipReason::NoData: return "no_data";
    case SkipReason::TooFewSites: return "too_few_sites";
    case SkipReason::Singular: return "singular";
  }
  return "unknown";
}

namespace {

SkipReason parse_reason(std::string_view text) {
  for (auto r : {SkipReason::NoData, SkipReason::TooFewSites, SkipReason::Singular})
    if (to_string(r) == text) return r;
  throw DomainError(fmt::format("unknown skip reason '{}'", text));
}

}  // namespace

FitOutcome fit_hourly_scale(const StaticPredictions& model, const HourObservations& obs,
                            const FusionOptions& options, HourStamp hour) {
  std::vector<std::pair<const std::string*, std::pair<double, double>>> pairs;  // site, (C̄, y)
  for (const auto& [site, y] : obs) {
    const auto it = model.find(site);
    if (it != model.end()) pairs.push_back({&site, {it->second, y}});
  }
  const std::size_t n = pairs.size();
  if (n == 0) return HourSkip{hour, SkipReason::NoData, 0};
  if (n < std::max<std::size_t>(options.min_sites, options.with_intercept ? 2 : 1))
    return HourSkip{hour, SkipReason::TooFewSites, n};

  HourFit fit;
  fit.hour = hour;
  fit.n_sites = n;
  if (!options.with_intercept) {
    double cy = 0.0;
    double cc = 0.0;
    for (const auto& [site, v] : pairs) {
      cy += v.first * v.second;
      cc += v.first * v.first;
    }
    if (!(cc > 0.0)) return HourSkip{hour, SkipReason::Singular, n};
    fit.a_hat = cy / cc;
  } else {
    double mc = 0.0;
    double my = 0.0;
    for (const auto& [site, v] : pairs) {
      mc += v.first;
      my += v.second;
    }
    mc /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& [site, v] : pairs) {
      sxy += (v.first - mc) * (v.second - my);
      sxx += (v.first - mc) * (v.first - mc);
    }
    if (!(sxx > 0.0)) return HourSkip{hour, SkipReason::Singular, n};
    fit.a_hat = sxy / sxx;
    fit.intercept = my - fit.a_hat * mc;
  }
  if (!std::isfinite(fit.a_hat)) return HourSkip{hour, SkipReason::Singular, n};
  fit.negative_scale = fit.a_hat < 0.0;

  const double b = fit.intercept.value_or(0.0);
  fit.residuals.reserve(n);
  for (const auto& [site, v] : pairs) {
    const double modeled = b + fit.a_hat * v.first;
    fit.residuals.push_back({*site, v.second, modeled, v.second - modeled, v.first});
  }
  return fit;
}

double FusionSeries::skip_fraction() const {
  const std::size_t total = hours.size() + skipped.size();
  return total == 0 ? 0.0 : static_cast<double>(skipped.size()) / static_cast<double>(total);
}

const HourFit* FusionSeries::find(HourStamp t) const {
  const auto it = std::lower_bound(hours.begin(), hours.end(), t,
                                   [](const HourFit& f, HourStamp h) { return f.hour < h; });
  return it != hours.end() && it->hour == t ? &*it : nullptr;
}

const HourSkip* FusionSeries::find_skip(HourStamp t) const {
  const auto it = std::lower_bound(skipped.begin(), skipped.end(), t,
                                   [](const HourSkip& s, HourStamp h) { return s.hour < h; });
  return it != skipped.end() && it->hour == t ? &*it : nullptr;
}

FusionSeries fuse_series(const StaticPredictions& model, std::span<const HourlyRecord> records, TimeWindow window,
                         Pollutant pollutant, const FusionOptions& options) {
  if (model.empty()) throw DomainError("fuse_series: no static predictions");
  const auto n_hours = static_cast<std::size_t>(window.hours());
  std::vector<HourObservations> by_hour(n_hours);
  for (const auto& r : records) {
    if (!window.contains(r.time)) continue;
    const auto v = r.value(pollutant);
    if (!v) continue;
    by_hour[static_cast<std::size_t>(r.time.hours - window.start.hours)].emplace(r.site_id, *v);
  }

  FusionSeries series;
  series.pollutant = pollutant;
  series.window_hours = n_hours;
  for (std::size_t i = 0; i < n_hours; ++i) {
    auto outcome = fit_hourly_scale(model, by_hour[i], options, window.start + static_cast<std::int64_t>(i));
    if (auto* fit = std::get_if<HourFit>(&outcome))
      series.hours.push_back(std::move(*fit));
    else
      series.skipped.push_back(std::get<HourSkip>(outcome));
  }
  return series;
}

std::array<std::optional<double>, 24> diurnal_means(std::span<const HourlyRecord> records, TimeWindow window,
                                                    Pollutant pollutant, int utc_offset_hours) {
  std::array<double, 24> sum{};
  std::array<std::size_t, 24> count{};
  for (const auto& r : records) {
    if (!window.contains(r.time)) continue;
    const auto v = r.value(pollutant);
    if (!v) continue;
    const auto h = static_cast<std::size_t>(local_hour_of_day(r.time, utc_offset_hours));
    sum[h] += *v;
    ++count[h];
  }
  std::array<std::optional<double>, 24> out;
  for (std::size_t h = 0; h < 24; ++h)
    if (count[h] > 0) out[h] = sum[h] / static_cast<double>(count[h]);
  return out;
}

void write_fusion_csv(const std::filesystem::path& path, std::span<const FusionSeries> series) {
  csv::Writer out(path);
  out.row({"timestamp_utc", "pollutant", "a_hat", "n_sites", "intercept", "negative_scale"});
  for (const auto& s : series)
    for (const auto& h : s.hours)
      out.row({format_hour(h.hour), std::string(to_string(s.pollutant)), csv::format_number(h.a_hat),
               std::to_string(h.n_sites), csv::format_optional(h.intercept), h.negative_scale ? "1" : "0"});
}

void write_residuals_csv(const std::filesystem::path& path, std::span<const FusionSeries> series) {
  csv::Writer out(path);
  out.row({"timestamp_utc", "pollutant", "site_id", "observed_ppb", "modeled_ppb", "residual_ppb", "static_ppb"});
  for (const auto& s : series)
    for (const auto& h : s.hours)
      for (const auto& e : h.residuals)
        out.row({format_hour(h.hour), std::string(to_string(s.pollutant)), e.site_id, csv::format_number(e.observed),
                 csv::format_number(e.modeled), csv::format_number(e.residual), csv::format_number(e.static_ppb)});
}

void write_skips_csv(const std::filesystem::path& path, std::span<const FusionSeries> series) {
  csv::Writer out(path);
  out.row({"timestamp_utc", "pollutant", "reason", "n_sites"});
  for (const auto& s : series)
    for (const auto& k : s.skipped)
      out.row({format_hour(k.hour), std::string(to_string(s.pollutant)), std::string(to_string(k.reason)),
               std::to_string(k.n_sites)});
}

std::vector<FusionSeries> read_series_csv(const std::filesystem::path& fusion_path,
                                          const std::filesystem::path& residuals_path,
                                          const std::filesystem::path& skips_path) {
  std::map<Pollutant, FusionSeries> by_pollutant;
  std::map<std::pair<Pollutant, std::int64_t>, std::size_t> index;
  auto series_for = [&](Pollutant p) -> FusionSeries& {
    auto& s = by_pollutant[p];
    s.pollutant = p;
    return s;
  };
  auto number = [](const std::string& field) {
    const auto v = csv::parse_optional_double(field);
    if (!v) throw DomainError("missing numeric field");
    return *v;
  };

  const auto fusion = csv::read(fusion_path);
  const auto c_time = fusion.require("timestamp_utc");
  const auto c_pol = fusion.require("pollutant");
  const auto c_a = fusion.require("a_hat");
  const auto c_n = fusion.require("n_sites");
  const auto c_b = fusion.find("intercept");
  for (const auto& row : fusion.rows) {
    HourFit h;
    h.hour = parse_hour(row.fields.at(c_time));
    h.a_hat = number(row.fields.at(c_a));
    h.n_sites = static_cast<std::size_t>(std::stoull(row.fields.at(c_n)));
    if (c_b) h.intercept = csv::parse_optional_double(row.fields.at(*c_b));
    h.negative_scale = h.a_hat < 0.0;
    const auto p = parse_pollutant(row.fields.at(c_pol));
    auto& s = series_for(p);
    index[{p, h.hour.hours}] = s.hours.size();
    s.hours.push_back(std::move(h));
  }

  const auto res = csv::read(residuals_path);
  const auto r_time = res.require("timestamp_utc");
  const auto r_pol = res.require("pollutant");
  const auto r_site = res.require("site_id");
  const auto r_obs = res.require("observed_ppb");
  const auto r_mod = res.require("modeled_ppb");
  const auto r_res = res.require("residual_ppb");
  const auto r_static = res.find("static_ppb");
  for (const auto& row : res.rows) {
    const auto p = parse_pollutant(row.fields.at(r_pol));
    const auto t = parse_hour(row.fields.at(r_time));
    const auto it = index.find({p, t.hours});
    if (it == index.end())
      throw DomainError(fmt::format("{}:{}: residual for an hour absent from {}", residuals_path.string(), row.line,
                                    fusion_path.string()));
    auto& h = by_pollutant[p].hours[it->second];
    SiteResidual e{row.fields.at(r_site), number(row.fields.at(r_obs)), number(row.fields.at(r_mod)),
                   number(row.fields.at(r_res)), 0.0};
    if (r_static)
      e.static_ppb = number(row.fields.at(*r_static));
    else if (!h.intercept && h.a_hat != 0.0)
      e.static_ppb = e.modeled / h.a_hat;
    h.residuals.push_back(std::move(e));
  }

  if (std::filesystem::exists(skips_path)) {
    const auto skips = csv::read(skips_path);
    const auto s_time = skips.require("timestamp_utc");
    const auto s_pol = skips.require("pollutant");
    const auto s_reason = skips.require("reason");
    const auto s_n = skips.require("n_sites");
    for (const auto& row : skips.rows)
      series_for(parse_pollutant(row.fields.at(s_pol)))
          .skipped.push_back({parse_hour(row.fields.at(s_time)), parse_reason(row.fields.at(s_reason)),
                              static_cast<std::size_t>(std::stoull(row.fields.at(s_n)))});
  }

  std::vector<FusionSeries> out;
  for (auto& [p, s] : by_pollutant) {
    std::ranges::sort(s.hours, {}, &HourFit::hour);
    std::ranges::sort(s.skipped, {}, &HourSkip::hour);
    for (auto& h : s.hours) std::ranges::sort(h.residuals, {}, &SiteResidual::site_id);
    s.window_hours = s.hours.size() + s.skipped.size();
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace lur::fusion
