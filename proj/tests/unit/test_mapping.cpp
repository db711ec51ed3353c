#include <doctest.h>

#include "../oracles.hpp"
#include "lur/forest.hpp"
#include "lur/mapping.hpp"

using namespace lur;
using namespace lur::mapping;

namespace {

const geo::GeoPoint kOrigin{34.0, -117.4};

features::LandUse toy_land_use() {
  std::vector<geo::RoadSegment> segs;
  for (int i = -5; i <= 5; ++i) {
    segs.push_back({"h" + std::to_string(i), {{-6000, 1000.0 * i}, {6000, 1000.0 * i + 200}},
                    i % 2 ? geo::RoadClass::Major : geo::RoadClass::Other, 100.0 * (i + 6), 1000.0 * (i + 6)});
    segs.push_back({"v" + std::to_string(i), {{1100.0 * i, -6000}, {1100.0 * i, 6000}}, geo::RoadClass::Other});
  }
  return {kOrigin, geo::RoadNetwork(segs), std::nullopt};
}

features::FeatureSpec toy_spec() {
  return {{{features::FeatureCode::RoadLength, 300},
           {features::FeatureCode::MajorRoadLength, 500},
           {features::FeatureCode::DistInvNear1, std::nullopt}}};
}

forest::Forest toy_forest(const features::LandUse& lu) {
  Rng r(1);
  std::vector<std::pair<std::string, features::Location>> pts;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    pts.emplace_back(std::to_string(i), features::Location::from_planar({r.uniform(-4000, 4000), r.uniform(-3000, 3000)}, kOrigin));
  }
  const auto t = features::extract_table(pts, lu, toy_spec());
  for (std::size_t i = 0; i < t.ids.size(); ++i) y.push_back(0.01 * t.values(i, 1) + 2.0 * t.values(i, 0) / 600.0);
  return forest::fit_forest(t.values, y, {.n_trees = 30, .mtry = 2, .min_node_size = 3, .seed = 5}, t.columns);
}

}  // namespace

TEST_CASE("grid dimensions are ceil(extent / resolution)") {
  const geo::Box box{{-5000, -3000}, {5000, 3000}};
  const auto g = make_grid(box, 500, kOrigin);
  CHECK(g.n_cols == 20);
  CHECK(g.n_rows == 12);
  CHECK(g.cells.size() == 240);
  for (double res : {333.0, 700.0, 1234.5, 999.999}) {
    const auto h = make_grid(box, res, kOrigin);
    CHECK(h.n_cols == oracle::grid_cells_along(10000, res));
    CHECK(h.n_rows == oracle::grid_cells_along(6000, res));
  }
  CHECK_THROWS_AS(make_grid(box, 0.0, kOrigin), DomainError);
  CHECK_THROWS_AS(make_grid({{0, 0}, {0, 10}}, 1.0, kOrigin), DomainError);
}

TEST_CASE("cells are centred on the box, north row first") {
  const auto g = make_grid({{-1000, -500}, {1000, 500}}, 500, kOrigin);
  const auto& nw = g.cell(0, 0);
  const auto& se = g.cell(g.n_rows - 1, g.n_cols - 1);
  CHECK(nw.where.planar.x == doctest::Approx(-750));
  CHECK(nw.where.planar.y == doctest::Approx(250));
  CHECK(se.where.planar.x == doctest::Approx(750));
  CHECK(se.where.planar.y == doctest::Approx(-250));
}

TEST_CASE("an anchor lands exactly on a cell centre") {
  const geo::Box box{{-5000, -3000}, {5000, 3000}};
  const geo::PlanarPoint anchor{1234.567891, -876.54321};
  const auto g = make_grid(box, 500, kOrigin, anchor);
  CHECK(g.cells.size() == 240);
  const auto& c = g.nearest_cell(anchor);
  CHECK(c.where.planar.x == anchor.x);
  CHECK(c.where.planar.y == anchor.y);
}

TEST_CASE("static, hourly and raster layers agree") {
  const auto lu = toy_land_use();
  const auto model = toy_forest(lu);
  const geo::PlanarPoint site{812.25, -431.5};
  auto g = make_grid({{-5000, -3000}, {5000, 3000}}, 500, kOrigin, site);
  predict_static_grid(g, model, lu, toy_spec(), 1.0, 2);

  const auto loc = features::Location::from_planar(site, kOrigin);
  const double direct = model.predict(features::extract_predictors(loc, lu, toy_spec()).values);
  CHECK(*g.nearest_cell(site).static_pred == direct);

  fusion::FusionSeries s;
  const auto hour = parse_hour("2018-05-10T14");
  s.hours.push_back({hour, 1.7, std::nullopt, 10, false, {}});
  s.skipped.push_back({hour + 1, fusion::SkipReason::TooFewSites, 2});
  const auto hourly = predict_hourly_grid(g, s, hour);
  for (const auto& c : hourly.cells) CHECK(std::abs(*c.hourly_pred - 1.7 * *c.static_pred) <= 1e-12 * std::abs(*c.hourly_pred));
  CHECK(hourly.argmax_hourly() == g.argmax_static());
  CHECK_THROWS_WITH_AS(predict_hourly_grid(g, s, hour + 1), doctest::Contains("too_few_sites"), DomainError);
  CHECK_THROWS_AS(predict_hourly_grid(g, s, hour + 2), DomainError);

  const auto raster = to_raster(hourly, true);
  CHECK(raster.n_rows == g.n_rows);
  CHECK(raster.n_cols == g.n_cols);
  CHECK(raster.at(0, 0) == *hourly.cell(0, 0).hourly_pred);
  const auto& sw = g.cell(g.n_rows - 1, 0).where.planar;
  CHECK(raster.origin.x == doctest::Approx(sw.x - 250));
  CHECK(raster.origin.y == doctest::Approx(sw.y - 250));
}

TEST_CASE("cells that cannot be extracted become nodata") {
  auto lu = toy_land_use();
  geo::RasterGrid small;
  small.origin = {-1000, -1000};
  small.cell_size = 100;
  small.n_rows = 20;
  small.n_cols = 20;
  small.values.assign(400, 300.0);
  lu.elevation = small;
  lu.elevation_crs = features::ElevationCrs::Planar;
  features::FeatureSpec spec{{{features::FeatureCode::Elevation, std::nullopt}}};
  Matrix X(4, 1);
  std::vector<double> y{1, 2, 3, 4};
  for (std::size_t i = 0; i < 4; ++i) X(i, 0) = static_cast<double>(i);
  const auto f = forest::fit_forest(X, y, {.n_trees = 5, .mtry = 1, .min_node_size = 1, .seed = 1}, {"Elevation"});
  auto g = make_grid({{-2000, -2000}, {2000, 2000}}, 1000, kOrigin);
  predict_static_grid(g, f, lu, spec);
  std::size_t missing = 0;
  for (const auto& c : g.cells) {
    if (!c.static_pred) {
      ++missing;
      CHECK_FALSE(c.error.empty());
    }
  }
  CHECK(missing == 12);
  CHECK(to_raster(g, false).is_nodata(to_raster(g, false).at(0, 0)));
}
