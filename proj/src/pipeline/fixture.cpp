#include "lur/fixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>

#include <fmt/format.h>

#include "lur/csv.hpp"
#include "lur/diagnostics.hpp"
#include "lur/feature_config.hpp"
#include "lur/features.hpp"
#include "lur/geo_io.hpp"
#include "lur/rng.hpp"
#include "lur/stats.hpp"

namespace lur::pipeline {

using nlohmann::json;

namespace {

// Independent random streams so that changing one component leaves the
// others untouched.
enum Stream : std::uint64_t { kRoads = 1, kSites, kSiteNoise, kWind, kDaily, kHourly, kGaps, kTraffic };

constexpr geo::GeoPoint kNominalOrigin{34.0, -117.35};
constexpr double kRoadHalfX = 12000.0;
constexpr double kRoadHalfY = 9000.0;
constexpr double kSiteHalfX = 8500.0;
constexpr double kSiteHalfY = 6000.0;
constexpr double kMinSpacing = 900.0;
constexpr double kStreetSpacing = 400.0;
constexpr double kCalmMs = 0.5;

// Land-use generating function.
constexpr double kNo2Base = 3.0;
constexpr double kNo2PerMajorM = 0.009;  // ppb per metre of major road within 500 m
constexpr double kNo2PerElevM = -0.04;   // ppb per metre above the reference elevation
constexpr double kO3Base = 38.0;
constexpr double kO3PerMajorM = -0.004;  // within 1000 m
constexpr double kO3PerElevM = 0.03;
constexpr double kElevRef = 320.0;
constexpr double kSiteNoiseShare = 0.15;  // site noise sd / signal sd
constexpr double kNo2HourlySd = 1.0;
constexpr double kO3HourlySd = 1.5;
constexpr double kMissingShare = 0.02;

double gauss(double dx, double dy, double s) { return std::exp(-(dx * dx + dy * dy) / (2.0 * s * s)); }

double street_density(double x, double y) {
  const double d = 0.25 + 0.7 * gauss(x - 2000.0, y - 1000.0, 4000.0) + 0.5 * gauss(x + 6000.0, y + 3000.0, 2500.0);
  return std::min(d, 0.95);
}

double elevation_surface(double x, double y) {
  return 320.0 + 0.011 * y + 0.004 * x + 70.0 * gauss(x - 4000.0, y + 2500.0, 1800.0) +
         45.0 * gauss(x + 5000.0, y - 3500.0, 1400.0) + 10.0 * std::sin(x / 1300.0) * std::cos(y / 1700.0);
}

double round_to(double v, double step) { return std::round(v / step) * step; }

struct ProtoRoad {
  std::string id;
  std::string road_class;
  std::vector<geo::PlanarPoint> points;
  std::optional<double> truck_aadt;
  std::optional<double> veh_aadt;
};

std::vector<ProtoRoad> make_roads(std::uint64_t seed) {
  Rng rng = Rng::stream(seed, kRoads);
  std::vector<ProtoRoad> roads;

  // Street grid: 400 m pieces kept with a probability that follows two
  // urban cores, so road density varies across the area.
  std::size_t piece = 0;
  for (double y = -kRoadHalfY + 200.0; y <= kRoadHalfY - 200.0; y += kStreetSpacing)
    for (double x = -kRoadHalfX; x + kStreetSpacing <= kRoadHalfX; x += kStreetSpacing)
      if (rng.uniform01() < street_density(x + 200.0, y))
        roads.push_back({fmt::format("st{}", piece++), "residential", {{x, y}, {x + kStreetSpacing, y}}, {}, {}});
  for (double x = -kRoadHalfX + 200.0; x <= kRoadHalfX - 200.0; x += kStreetSpacing)
    for (double y = -kRoadHalfY; y + kStreetSpacing <= kRoadHalfY; y += kStreetSpacing)
      if (rng.uniform01() < street_density(x, y + 200.0))
        roads.push_back({fmt::format("st{}", piece++), "residential", {{x, y}, {x, y + kStreetSpacing}}, {}, {}});

  // Major roads: three gently sloping east-west and three north-south
  // alignments with a small wiggle, cut into 2 km traffic-count sections.
  struct Alignment {
    bool east_west;
    double offset;
    double slope;
    const char* road_class;
    double veh_base;
    double truck_share;
  };
  const Alignment alignments[] = {
      {true, -3600.0, 0.05, "motorway", 120000.0, 0.12}, {true, 700.0, -0.04, "primary", 35000.0, 0.06},
      {true, 4600.0, 0.03, "secondary", 18000.0, 0.04},  {false, -6500.0, 0.04, "trunk", 60000.0, 0.09},
      {false, -300.0, -0.03, "primary", 30000.0, 0.05},  {false, 5800.0, 0.02, "secondary", 15000.0, 0.03},
  };
  Rng traffic = Rng::stream(seed, kTraffic);
  for (std::size_t a = 0; a < std::size(alignments); ++a) {
    const auto& al = alignments[a];
    const double half = al.east_west ? kRoadHalfX : kRoadHalfY;
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    std::vector<geo::PlanarPoint> line;
    for (double s = -half; s <= half + 1e-9; s += 250.0) {
      const double across = al.offset + al.slope * s + 150.0 * std::sin(s / 5000.0 * 2.0 * std::numbers::pi + phase);
      line.push_back(al.east_west ? geo::PlanarPoint{s, across} : geo::PlanarPoint{across, s});
    }
    std::size_t section = 0;
    for (std::size_t i = 0; i + 1 < line.size(); i += 8) {
      ProtoRoad r;
      r.id = fmt::format("major{}_{}", a, section++);
      r.road_class = al.road_class;
      r.points.assign(line.begin() + static_cast<std::ptrdiff_t>(i),
                      line.begin() + static_cast<std::ptrdiff_t>(std::min(i + 9, line.size())));
      const double veh = std::round(al.veh_base * traffic.uniform(0.8, 1.2));
      r.veh_aadt = veh;
      r.truck_aadt = std::round(veh * al.truck_share * traffic.uniform(0.8, 1.2));
      roads.push_back(std::move(r));
    }
  }
  // One section without counts, as in real traffic databases.
  for (auto& r : roads)
    if (r.id == "major4_3") {
      r.veh_aadt.reset();
      r.truck_aadt.reset();
    }
  return roads;
}

std::string roads_to_geojson(const std::vector<ProtoRoad>& roads) {
  json fc;
  fc["type"] = "FeatureCollection";
  fc["features"] = json::array();
  for (const auto& r : roads) {
    json coords = json::array();
    for (const auto& p : r.points) {
      const auto g = geo::unproject(p, kNominalOrigin);
      coords.push_back({round_to(g.lon, 1e-7), round_to(g.lat, 1e-7)});
    }
    json f;
    f["type"] = "Feature";
    f["id"] = r.id;
    f["properties"] = {{"road_class", r.road_class},
                       {"truck_aadt", r.truck_aadt ? json(*r.truck_aadt) : json(nullptr)},
                       {"veh_aadt", r.veh_aadt ? json(*r.veh_aadt) : json(nullptr)}};
    f["geometry"] = {{"type", "LineString"}, {"coordinates", coords}};
    fc["features"].push_back(std::move(f));
  }
  return fc.dump() + "\n";
}

geo::RasterGrid make_elevation() {
  geo::RasterGrid g;
  g.cell_size = 1.0 / 1200.0;  // 3 arc-seconds
  g.n_cols = 360;
  g.n_rows = 240;
  g.origin = {-117.50, 33.90};
  g.values.resize(g.n_rows * g.n_cols);
  for (std::size_t r = 0; r < g.n_rows; ++r)
    for (std::size_t c = 0; c < g.n_cols; ++c) {
      const auto centre = g.cell_center(r, c);
      const auto p = geo::project({centre.y, centre.x}, kNominalOrigin);
      g.values[r * g.n_cols + c] = round_to(elevation_surface(p.x, p.y), 0.1);
    }
  // A void in the north-east, away from the sites.
  for (std::size_t r = 10; r < 16; ++r)
    for (std::size_t c = 300; c < 307; ++c) g.values[r * g.n_cols + c] = g.nodata;
  return g;
}

std::vector<SensorSite> make_sites(std::uint64_t seed, std::size_t n) {
  Rng rng = Rng::stream(seed, kSites);
  std::vector<geo::PlanarPoint> placed;
  std::size_t attempts = 0;
  while (placed.size() < n) {
    if (++attempts > 100000) throw DomainError("fixture: cannot place sites at the requested spacing");
    const geo::PlanarPoint p{rng.uniform(-kSiteHalfX, kSiteHalfX), rng.uniform(-kSiteHalfY, kSiteHalfY)};
    if (std::ranges::all_of(placed, [&](const auto& q) { return geo::distance(p, q) >= kMinSpacing; }))
      placed.push_back(p);
  }
  std::vector<SensorSite> sites;
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = geo::unproject(placed[i], kNominalOrigin);
    sites.push_back({std::to_string(101 + i), {round_to(g.lat, 1e-6), round_to(g.lon, 1e-6)}});
  }
  return sites;
}

struct WindRegime {
  double dir_lo;
  double dir_hi;
  bool calm;
};

}  // namespace

Fixture generate_fixture(const FixtureOptions& options) {
  if (options.n_sites < 8) throw DomainError("fixture needs at least 8 sites");
  if (options.window.hours() <= 0) throw DomainError("fixture window is empty");
  const std::uint64_t seed = options.seed;

  Fixture fx;
  fx.options = options;
  fx.sites = make_sites(seed, options.n_sites);
  const auto roads = make_roads(seed);
  fx.roads_geojson = roads_to_geojson(roads);
  fx.elevation = make_elevation();

  std::vector<geo::GeoPoint> locations;
  for (const auto& s : fx.sites) locations.push_back(s.location);
  const auto origin = geo::bbox_centroid(locations);
  fx.truth.origin = origin;

  // True land-use values, extracted exactly as the pipeline will from the
  // files written below.
  features::LandUse land_use{origin,
                             geo::RoadNetwork(geo::parse_roads_geojson(fx.roads_geojson, origin, {}).segments),
                             fx.elevation, features::ElevationCrs::Geographic};
  features::FeatureSpec spec;
  spec.entries = {{features::FeatureCode::Elevation, std::nullopt, {}},
                  {features::FeatureCode::MajorRoadLength, 500, {}},
                  {features::FeatureCode::MajorRoadLength, 1000, {}}};
  std::vector<double> no2_signal, o3_signal;
  for (const auto& s : fx.sites) {
    const auto v = features::extract_predictors(features::Location::from_geo(s.location, origin), land_use, spec);
    const double elev = v.values[0] - kElevRef;
    no2_signal.push_back(kNo2Base + kNo2PerMajorM * v.values[1] + kNo2PerElevM * elev);
    o3_signal.push_back(kO3Base + kO3PerMajorM * v.values[2] + kO3PerElevM * elev);
  }
  Rng site_noise = Rng::stream(seed, kSiteNoise);
  const double no2_noise_sd = kSiteNoiseShare * stats::sd(no2_signal);
  const double o3_noise_sd = kSiteNoiseShare * stats::sd(o3_signal);
  for (std::size_t i = 0; i < fx.sites.size(); ++i) {
    const double n1 = site_noise.normal();
    const double n2 = site_noise.normal();
    fx.truth.site_means[Pollutant::NO2][fx.sites[i].id] = std::max(no2_signal[i] + no2_noise_sd * n1, 1.0);
    fx.truth.site_means[Pollutant::O3][fx.sites[i].id] = std::max(o3_signal[i] + o3_noise_sd * n2, 5.0);
  }
  fx.truth.planted_feature[Pollutant::NO2] = "MAJORROADLENGTH_500";
  fx.truth.planted_feature[Pollutant::O3] = "MAJORROADLENGTH_1000";

  // Diurnal scale a(l): day-to-day factor times a cosine with a near-zero
  // minimum, peaking at 07:00 local for NO2 and 14:00 for O3.
  const auto n_hours = static_cast<std::size_t>(options.window.hours());
  Rng daily = Rng::stream(seed, kDaily);
  std::map<std::int64_t, std::pair<double, double>> day_factor;
  for (std::size_t i = 0; i < n_hours; ++i) {
    const auto t = options.window.start + static_cast<std::int64_t>(i);
    const std::int64_t local = t.hours + options.utc_offset_hours;
    const std::int64_t day = local >= 0 ? local / 24 : (local - 23) / 24;
    if (!day_factor.contains(day)) {
      const double f1 = std::clamp(1.0 + 0.15 * daily.normal(), 0.6, 1.4);
      const double f2 = std::clamp(1.0 + 0.15 * daily.normal(), 0.6, 1.4);
      day_factor[day] = {f1, f2};
    }
    const auto [f_no2, f_o3] = day_factor[day];
    const double h = local_hour_of_day(t, options.utc_offset_hours);
    fx.truth.scale[Pollutant::NO2].push_back(f_no2 * (1.0 + 0.9 * std::cos(2.0 * std::numbers::pi * (h - 7.0) / 24.0)));
    fx.truth.scale[Pollutant::O3].push_back(f_o3 * (1.0 + 0.95 * std::cos(2.0 * std::numbers::pi * (h - 14.0) / 24.0)));
  }

  // Designated sites: three without anemometers, two with a wind-sector
  // bias, one with a ten-day outage.
  const auto id_at = [&](std::size_t i) { return fx.sites[i % fx.sites.size()].id; };
  fx.truth.sites_without_wind = {id_at(3), id_at(12), id_at(25)};
  fx.truth.anomalies = {{id_at(7), 0, 10.0}, {id_at(19), 4, 10.0}};
  const std::string outage_site = id_at(28);
  const std::int64_t outage_lo = options.window.start.hours + 20 * 24;
  const std::int64_t outage_hi = outage_lo + 10 * 24;

  // Wind: six-hour regimes shared by the area, jittered per site.
  const WindRegime regimes[] = {{200.0, 250.0, false}, {6.0, 16.0, false}, {96.0, 106.0, false},
                                {300.0, 330.0, false}, {0.0, 360.0, true}};
  const double regime_cdf[] = {0.60, 0.74, 0.88, 0.95, 1.0};
  Rng wind_rng = Rng::stream(seed, kWind);
  std::vector<std::pair<double, double>> area_wind(n_hours);  // dir, speed
  std::vector<bool> area_calm(n_hours);
  for (std::size_t i = 0; i < n_hours; i += 6) {
    const double u = wind_rng.uniform01();
    const auto k = static_cast<std::size_t>(std::ranges::find_if(regime_cdf, [&](double c) { return u < c; }) -
                                            std::begin(regime_cdf));
    const auto& reg = regimes[std::min<std::size_t>(k, std::size(regimes) - 1)];
    const double base_dir = wind_rng.uniform(reg.dir_lo, reg.dir_hi);
    const double base_speed = reg.calm ? 0.0 : wind_rng.uniform(1.0, 6.0);
    for (std::size_t j = i; j < std::min(i + 6, n_hours); ++j) {
      area_calm[j] = reg.calm;
      if (reg.calm)
        area_wind[j] = {wind_rng.uniform(0.0, 360.0), wind_rng.uniform(0.0, 0.4)};
      else
        area_wind[j] = {base_dir + wind_rng.uniform(-2.0, 2.0), base_speed * wind_rng.uniform(0.9, 1.1)};
    }
  }

  Rng hourly = Rng::stream(seed, kHourly);
  Rng gaps = Rng::stream(seed, kGaps);
  const bool noisy = options.hourly_noise;
  for (const auto& site : fx.sites) {
    const bool has_wind = std::ranges::find(fx.truth.sites_without_wind, site.id) == fx.truth.sites_without_wind.end();
    const auto anomaly = std::ranges::find(fx.truth.anomalies, site.id, &AnomalySite::site_id);
    const double m_no2 = fx.truth.site_means[Pollutant::NO2][site.id];
    const double m_o3 = fx.truth.site_means[Pollutant::O3][site.id];
    for (std::size_t i = 0; i < n_hours; ++i) {
      const auto t = options.window.start + static_cast<std::int64_t>(i);
      HourlyRecord r;
      r.site_id = site.id;
      r.time = t;

      // Draws happen unconditionally so every site consumes the same
      // amount of randomness per hour.
      const double dir_jitter = wind_rng.uniform(-3.0, 3.0);
      const double speed_jitter = wind_rng.uniform(0.85, 1.15);
      const double e_no2 = hourly.normal();
      const double e_o3 = hourly.normal();
      const double g_no2 = gaps.uniform01();
      const double g_o3 = gaps.uniform01();
      const double g_wind = gaps.uniform01();

      if (has_wind) {
        double dir = std::fmod(area_wind[i].first + dir_jitter + 360.0, 360.0);
        double speed = area_wind[i].second * speed_jitter;
        if (options.round_values) {
          dir = round_to(dir, 0.1);
          speed = round_to(speed, 0.1);
        }
        if (dir >= 360.0) dir = 0.0;
        r.wind_dir_deg = dir;
        r.wind_speed_ms = speed;
      }

      double no2 = fx.truth.scale[Pollutant::NO2][i] * m_no2;
      double o3 = fx.truth.scale[Pollutant::O3][i] * m_o3;
      if (noisy) {
        no2 += kNo2HourlySd * e_no2;
        o3 += kO3HourlySd * e_o3;
        if (anomaly != fx.truth.anomalies.end() && r.wind_speed_ms && *r.wind_speed_ms >= kCalmMs &&
            diagnostics::sector_of(*r.wind_dir_deg, 16) == anomaly->sector)
          no2 += anomaly->bias_ppb;
      }
      if (options.round_values) {
        no2 = round_to(no2, 0.001);
        o3 = round_to(o3, 0.001);
      }
      r.no2_ppb = no2;
      r.o3_ppb = o3;

      if (noisy) {
        if (site.id == outage_site && t.hours >= outage_lo && t.hours < outage_hi) continue;
        if (g_no2 < kMissingShare) r.no2_ppb.reset();
        if (g_o3 < kMissingShare) r.o3_ppb.reset();
        if (g_wind < kMissingShare) {
          r.wind_dir_deg.reset();
          r.wind_speed_ms.reset();
        }
        if (!r.no2_ppb && !r.o3_ppb && !r.wind_dir_deg) continue;
      }
      fx.records.push_back(std::move(r));
    }
  }

  fx.truth.parameters = {
      {"seed", seed},
      {"n_sites", options.n_sites},
      {"utc_offset_hours", options.utc_offset_hours},
      {"hourly_noise", options.hourly_noise},
      {"no2_mean", {{"base", kNo2Base}, {"per_m_major_road_500m", kNo2PerMajorM}, {"per_m_elevation", kNo2PerElevM}}},
      {"o3_mean", {{"base", kO3Base}, {"per_m_major_road_1000m", kO3PerMajorM}, {"per_m_elevation", kO3PerElevM}}},
      {"elevation_reference_m", kElevRef},
      {"site_noise_sd_share_of_signal_sd", kSiteNoiseShare},
      {"hourly_noise_sd_ppb", {{"NO2", kNo2HourlySd}, {"O3", kO3HourlySd}}},
      {"scale", "a(l) = day factor * (1 + amp * cos(2 pi (h_local - peak) / 24)); NO2 amp 0.9 peak 7, O3 amp 0.95 peak 14"},
      {"missing_share", kMissingShare},
      {"outage", {{"site_id", outage_site}, {"start", format_hour({outage_lo})}, {"end", format_hour({outage_hi})}}},
      {"calm_below_ms", kCalmMs},
  };
  return fx;
}

json to_json(const FixtureTruth& truth, const TimeWindow& window) {
  json j;
  j["origin"] = {{"lat", truth.origin.lat}, {"lon", truth.origin.lon}};
  j["window"] = {{"start", format_hour(window.start)}, {"end", format_hour(window.end)}};
  j["parameters"] = truth.parameters;
  for (const auto& [p, means] : truth.site_means) j["site_means_ppb"][std::string(to_string(p))] = means;
  for (const auto& [p, a] : truth.scale) j["scale"][std::string(to_string(p))] = a;
  for (const auto& [p, name] : truth.planted_feature) j["planted_feature"][std::string(to_string(p))] = name;
  j["anomalies"] = json::array();
  for (const auto& a : truth.anomalies)
    j["anomalies"].push_back({{"site_id", a.site_id}, {"pollutant", "NO2"}, {"sector_of_16", a.sector},
                              {"bias_ppb", a.bias_ppb}});
  j["sites_without_wind"] = truth.sites_without_wind;
  return j;
}

void write_fixture(const Fixture& fx, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    csv::Writer out(out_dir / "sites.csv");
    out.row({"site_id", "lat", "lon"});
    for (const auto& s : fx.sites)
      out.row({s.id, csv::format_number(s.location.lat), csv::format_number(s.location.lon)});
  }
  {
    csv::Writer out(out_dir / "observations.csv");
    out.row({"site_id", "timestamp_utc", "no2_ppb", "o3_ppb", "wind_speed_ms", "wind_dir_deg"});
    for (const auto& r : fx.records)
      out.row({r.site_id, format_hour(r.time), csv::format_optional(r.no2_ppb), csv::format_optional(r.o3_ppb),
               csv::format_optional(r.wind_speed_ms), csv::format_optional(r.wind_dir_deg)});
  }
  {
    std::ofstream out(out_dir / "roads.geojson", std::ios::binary | std::ios::trunc);
    out << fx.roads_geojson;
  }
  geo::write_esri_ascii(out_dir / "elevation.asc", fx.elevation);
  {
    std::ofstream out(out_dir / "truth.json", std::ios::binary | std::ios::trunc);
    out << to_json(fx.truth, fx.options.window).dump(2) << '\n';
  }
  features::save_feature_config(out_dir / "feature_spec.json", features::FeatureConfig::defaults());

  // Anchor the map lattice on the site nearest the map centre.
  const auto& anchor = *std::ranges::min_element(fx.sites, {}, [&](const SensorSite& s) {
    return geo::distance(geo::project(s.location, fx.truth.origin), {0.0, 0.0});
  });
  json cfg = {
      {"sites", "sites.csv"},
      {"observations", "observations.csv"},
      {"roads", "roads.geojson"},
      {"elevation", "elevation.asc"},
      {"elevation_crs", "geographic"},
      {"window", {{"start", format_hour(fx.options.window.start)}, {"end", format_hour(fx.options.window.end)}}},
      {"utc_offset_hours", fx.options.utc_offset_hours},
      {"pollutants", {"NO2", "O3"}},
      {"feature_spec", "feature_spec.json"},
      {"approach", 1},
      {"completeness_min", 0.75},
      {"forest", {{"n_trees", 500}, {"min_node_size", 5}, {"mtry_grid", json::array()}, {"k", 10},
                  {"importance_repeats", 10}}},
      {"fusion", {{"min_sites", 5}, {"with_intercept", false}}},
      {"diagnostics", {{"sectors", 16}, {"speed_edges_ms", {0.5, 2.0, 4.0, 8.0}}, {"wind_reference_site", nullptr},
                       {"timeseries_sites", json::array()}}},
      {"mapping", {{"resolution_m", 500.0}, {"bbox_m", {-5000.0, -3000.0, 5000.0, 3000.0}},
                   {"hours", {"2018-05-10T14:00:00Z"}}, {"anchor_site", anchor.id}}},
      {"seed", fx.options.seed},
      {"output_dir", "out"},
  };
  std::ofstream out(out_dir / "config.json", std::ios::binary | std::ios::trunc);
  out << cfg.dump(2) << '\n';
}

}  // namespace lur::pipeline
