#include <doctest.h>

#include <filesystem>

#include "lur/feature_config.hpp"
#include "lur/features.hpp"
#include "lur/rng.hpp"

using namespace lur;
using namespace lur::features;

namespace {

const geo::GeoPoint kOrigin{34.0, -117.4};

LandUse toy_land_use() {
  std::vector<geo::RoadSegment> segs{
      {"minor", {{-2000, 0}, {2000, 0}}, geo::RoadClass::Other},
      {"major", {{-2000, 300}, {2000, 300}}, geo::RoadClass::Major, 800.0, 25000.0},
      {"far_s", {{-2000, -2000}, {2000, -2000}}, geo::RoadClass::Other},
      {"far_n", {{-2000, 2000}, {2000, 2000}}, geo::RoadClass::Other},
  };
  geo::RasterGrid g;
  g.origin = {-3000, -3000};
  g.cell_size = 100;
  g.n_rows = 60;
  g.n_cols = 60;
  for (std::size_t r = 0; r < g.n_rows; ++r)
    for (std::size_t c = 0; c < g.n_cols; ++c) g.values.push_back(300.0 + 0.01 * g.cell_center(r, c).y);
  return LandUse{kOrigin, geo::RoadNetwork(segs), g, ElevationCrs::Planar};
}

FeatureSpec spec_of(std::initializer_list<FeatureEntry> entries) { return FeatureSpec{entries}; }

}  // namespace

TEST_CASE("feature names") {
  CHECK(FeatureEntry{FeatureCode::MajorRoadLength, 500}.name() == "MAJORROADLENGTH_500");
  CHECK(FeatureEntry{FeatureCode::DistInvNear1, std::nullopt}.name() == "DISTINVNEAR1");
  CHECK(parse_code("VEH_AADT") == FeatureCode::VehAadt);
  CHECK_THROWS_AS(parse_code("NDVI"), DomainError);
}

TEST_CASE("full spec expands buffered families over every buffer") {
  const auto spec = FeatureConfig::defaults().full_spec();
  CHECK(spec.entries.size() == 6 + 2 * 7);
  CHECK(spec.max_buffer() == 1000.0);
  CHECK_NOTHROW(spec.validate());
  auto dup = spec;
  dup.entries.push_back(dup.entries.front());
  CHECK_THROWS_AS(dup.validate(), DomainError);
}

TEST_CASE("predictors on a two-road toy network") {
  const auto lu = toy_land_use();
  const auto spec = spec_of({{FeatureCode::RoadLength, 100},
                             {FeatureCode::RoadLength, 500},
                             {FeatureCode::MajorRoadLength, 500},
                             {FeatureCode::DistInvNear1, std::nullopt},
                             {FeatureCode::TruckAadt, std::nullopt},
                             {FeatureCode::VehAadt, std::nullopt},
                             {FeatureCode::Elevation, std::nullopt},
                             {FeatureCode::Lat, std::nullopt}});
  const auto at = Location::from_planar({0, 0}, kOrigin);
  const auto pv = extract_predictors(at, lu, spec);
  CHECK(*pv.get("ROADLENGTH_100") == doctest::Approx(200.0));
  // 2*sqrt(500^2 - 300^2) of the major road plus the minor diameter
  CHECK(*pv.get("ROADLENGTH_500") == doctest::Approx(1000.0 + 800.0));
  CHECK(*pv.get("MAJORROADLENGTH_500") == doctest::Approx(800.0));
  CHECK(*pv.get("DISTINVNEAR1") == doctest::Approx(1.0 / 300.0));
  CHECK(*pv.get("TRUCK_AADT") == 800.0);
  CHECK(*pv.get("VEH_AADT") == 25000.0);
  CHECK(*pv.get("Elevation") == doctest::Approx(300.0));
  CHECK(*pv.get("Lat") == doctest::Approx(34.0));
  CHECK_FALSE(pv.flags.no_major_road);
  CHECK_FALSE(pv.flags.edge_effect);
}

TEST_CASE("inverse distance is capped at the minimum distance") {
  const auto lu = toy_land_use();
  const auto spec = spec_of({{FeatureCode::DistInvNear1, std::nullopt}});
  const auto on_road = extract_predictors(Location::from_planar({0, 300}, kOrigin), lu, spec, 1.0);
  CHECK(on_road.values[0] == 1.0);
}

TEST_CASE("no major road zeroes distance and traffic and flags the point") {
  LandUse lu{kOrigin, geo::RoadNetwork({{"minor", {{-100, 0}, {100, 0}}, geo::RoadClass::Other}}), std::nullopt};
  const auto spec = spec_of({{FeatureCode::DistInvNear1, std::nullopt}, {FeatureCode::VehAadt, std::nullopt},
                             {FeatureCode::RoadLength, 1000}});
  const auto pv = extract_predictors(Location::from_planar({0, 0}, kOrigin), lu, spec);
  CHECK(pv.values[0] == 0.0);
  CHECK(pv.values[1] == 0.0);
  CHECK(pv.flags.no_major_road);
  CHECK(pv.flags.edge_effect);
  CHECK_THROWS_AS(extract_predictors(Location::from_planar({0, 0}, kOrigin), lu,
                                     spec_of({{FeatureCode::Elevation, std::nullopt}})),
                  DomainError);
}

TEST_CASE("equal planar positions give bit-identical predictor vectors") {
  const auto lu = toy_land_use();
  const auto spec = spec_of({{FeatureCode::RoadLength, 300}, {FeatureCode::Lat, std::nullopt},
                             {FeatureCode::Long, std::nullopt}, {FeatureCode::Elevation, std::nullopt}});
  const auto g = geo::unproject({123.4, -56.7}, kOrigin);
  const auto a = Location::from_geo(g, kOrigin);
  const auto b = Location::from_planar(a.planar, kOrigin);
  CHECK(extract_predictors(a, lu, spec).values == extract_predictors(b, lu, spec).values);
}

TEST_CASE("site means apply the completeness threshold") {
  const TimeWindow w{parse_hour("2018-04-01T00"), parse_hour("2018-04-01T10")};
  std::vector<HourlyRecord> recs;
  for (int h = 0; h < 10; ++h) recs.push_back({"A", w.start + h, 2.0 * h, std::nullopt, std::nullopt, std::nullopt});
  for (int h = 0; h < 5; ++h) recs.push_back({"B", w.start + h, 1.0, 1.0, std::nullopt, std::nullopt});
  recs.push_back({"A", w.end, 999.0, std::nullopt, std::nullopt, std::nullopt});  // outside the window
  const std::vector<std::string> known{"A", "B", "C"};
  const auto m = mean_concentrations(recs, w, Pollutant::NO2, 0.75, known);
  REQUIRE(m.sites.size() == 1);
  CHECK(m.sites[0].site_id == "A");
  CHECK(m.sites[0].mean_ppb == doctest::Approx(9.0));
  CHECK(m.excluded.size() == 2);
  CHECK_THROWS_AS(mean_concentrations(recs, w, Pollutant::O3, 0.75, known), PipelineError);
  CHECK(mean_concentrations(recs, w, Pollutant::O3, 0.5, known).sites.size() == 1);
}

TEST_CASE("buffer optimisation keeps the best-correlated buffer per family") {
  FeatureTable t;
  t.columns = {"ROADLENGTH_100", "ROADLENGTH_500", "MAJORROADLENGTH_100", "MAJORROADLENGTH_500", "Elevation"};
  std::vector<double> y;
  Rng r(4);
  for (int i = 0; i < 12; ++i) {
    const double target = r.uniform(0, 10);
    y.push_back(target);
    t.ids.push_back(std::to_string(i));
    // 500 m road length tracks the target, 100 m is noise; the major
    // family is constant at 100 m and negatively related at 500 m
    t.values.append_row(std::vector<double>{r.uniform(0, 1), 3 * target + r.uniform(0, 0.1), 5.0,
                                            -target + r.uniform(0, 0.5), r.uniform(200, 400)});
  }
  const auto spec = spec_of({{FeatureCode::RoadLength, 100},
                             {FeatureCode::RoadLength, 500},
                             {FeatureCode::MajorRoadLength, 100},
                             {FeatureCode::MajorRoadLength, 500},
                             {FeatureCode::Elevation, std::nullopt}});
  const auto abs_sel = optimize_buffers(t, y, spec, CorrelationMode::Absolute);
  CHECK(abs_sel.spec.names() == std::vector<std::string>{"ROADLENGTH_500", "MAJORROADLENGTH_500", "Elevation"});
  const auto signed_sel = optimize_buffers(t, y, spec, CorrelationMode::Signed);
  CHECK(signed_sel.spec.find("ROADLENGTH_500") != nullptr);
  CHECK(signed_sel.spec.find("MAJORROADLENGTH_500") != nullptr);  // the only defined r in its family
}

TEST_CASE("buffer ties go to the smaller buffer") {
  FeatureTable t;
  t.columns = {"ROADLENGTH_100", "ROADLENGTH_500"};
  std::vector<double> y{1, 2, 3, 4};
  for (double v : y) {
    t.ids.push_back("s");
    t.values.append_row(std::vector<double>{v, v});
  }
  const auto sel = optimize_buffers(t, y, spec_of({{FeatureCode::RoadLength, 100}, {FeatureCode::RoadLength, 500}}));
  REQUIRE(sel.families.size() == 1);
  CHECK(*sel.families[0].chosen_buffer == 100);
}

TEST_CASE("sign filter drops contradicting predictors and reports infeasibility") {
  FeatureSpec spec;
  spec.entries.push_back({FeatureCode::RoadLength, 100, {{Pollutant::O3, Sign::Negative}}});
  spec.entries.push_back({FeatureCode::Elevation, std::nullopt, {}});
  Correlations corr{{"ROADLENGTH_100", 0.4}, {"Elevation", -0.3}};
  const auto keep = filter_by_sign(spec, corr, Pollutant::NO2);
  CHECK(keep.spec.entries.size() == 2);
  const auto o3 = filter_by_sign(spec, corr, Pollutant::O3);
  CHECK(o3.removed == std::vector<std::string>{"ROADLENGTH_100"});
  CHECK_FALSE(o3.infeasible);

  FeatureSpec strict;
  strict.entries.push_back({FeatureCode::RoadLength, 100, {{Pollutant::O3, Sign::Negative}}});
  strict.entries.push_back({FeatureCode::Elevation, std::nullopt, {{Pollutant::O3, Sign::Positive}}});
  const auto none = filter_by_sign(strict, corr, Pollutant::O3);
  CHECK(none.infeasible);
  CHECK(none.spec.entries.empty());
  // an undefined correlation never contradicts
  Correlations undefined{{"ROADLENGTH_100", std::nullopt}, {"Elevation", -0.3}};
  CHECK(filter_by_sign(strict, undefined, Pollutant::O3).spec.entries.size() == 1);
}

TEST_CASE("feature config survives a json round trip") {
  auto cfg = FeatureConfig::defaults();
  cfg.buffers = {50, 500};
  cfg.min_distance_m = 2.5;
  cfg.expected_signs[Pollutant::O3][FeatureCode::Elevation] = Sign::Positive;
  const auto path = std::filesystem::temp_directory_path() / "lur_feature_config.json";
  save_feature_config(path, cfg);
  const auto back = load_feature_config(path);
  CHECK(back.buffers == cfg.buffers);
  CHECK(back.min_distance_m == 2.5);
  CHECK(back.full_spec().names() == cfg.full_spec().names());
  CHECK(back.expected_signs == cfg.expected_signs);
  std::filesystem::remove(path);
  const auto spec = cfg.full_spec();
  CHECK(feature_spec_from_json(to_json(spec)).names() == spec.names());
}
