#include <doctest.h>

#include <filesystem>

#include "../oracles.hpp"
#include "lur/geo.hpp"
#include "lur/geo_io.hpp"
#include "lur/rng.hpp"

using namespace lur;
using namespace lur::geo;

namespace {

RoadSegment random_polyline(Rng& r, double spread) {
  RoadSegment s;
  const auto n = 2 + r.uniform_below(5);
  for (std::size_t i = 0; i < n; ++i) s.polyline.push_back({r.uniform(-spread, spread), r.uniform(-spread, spread)});
  return s;
}

}  // namespace

TEST_CASE("projection round trip and scale") {
  const GeoPoint origin{34.0, -117.4};
  const GeoPoint p{34.05, -117.35};
  const auto xy = project(p, origin);
  const auto back = unproject(xy, origin);
  CHECK(back.lat == doctest::Approx(p.lat).epsilon(1e-12));
  CHECK(back.lon == doctest::Approx(p.lon).epsilon(1e-12));
  // one degree of latitude
  CHECK(project({35.0, -117.4}, origin).y == doctest::Approx(kEarthRadius * M_PI / 180.0));
  CHECK(project(origin, origin) == PlanarPoint{0.0, 0.0});
  CHECK_THROWS_AS(project({95.0, 0.0}, origin), DomainError);
}

TEST_CASE("clip length of simple configurations") {
  RoadSegment through{"a", {{-100, 0}, {100, 0}}};
  CHECK(clip_length_in_circle(through, {0, 0}, 50) == doctest::Approx(100.0));
  CHECK(clip_length_in_circle(through, {0, 30}, 50) == doctest::Approx(80.0));
  CHECK(clip_length_in_circle(through, {0, 60}, 50) == 0.0);
  RoadSegment inside{"b", {{-10, 0}, {10, 0}, {10, 10}}};
  CHECK(clip_length_in_circle(inside, {0, 0}, 50) == doctest::Approx(30.0));
  RoadSegment tangent{"c", {{-100, 50}, {100, 50}}};
  CHECK(clip_length_in_circle(tangent, {0, 0}, 50) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("analytic clip agrees with the sampling oracle") {
  Rng r(2024);
  for (int i = 0; i < 40; ++i) {
    const auto seg = random_polyline(r, 300);
    const PlanarPoint c{r.uniform(-150, 150), r.uniform(-150, 150)};
    const double radius = r.uniform(10, 250);
    CHECK(std::abs(clip_length_in_circle(seg, c, radius) - oracle::sampled_clip_length(seg, c, radius)) < 0.1);
  }
}

TEST_CASE("clip length is monotone in the radius and bounded by the polyline length") {
  Rng r(8);
  for (int i = 0; i < 100; ++i) {
    const auto seg = random_polyline(r, 500);
    const PlanarPoint c{r.uniform(-200, 200), r.uniform(-200, 200)};
    double prev = 0.0;
    for (double radius : {24.0, 50.0, 100.0, 200.0, 300.0, 500.0, 1000.0}) {
      const double len = clip_length_in_circle(seg, c, radius);
      CHECK(len >= prev - 1e-9);
      CHECK(len <= seg.length() + 1e-9);
      prev = len;
    }
  }
}

TEST_CASE("indexed buffer sum equals a full scan") {
  Rng r(77);
  std::vector<RoadSegment> segs;
  for (int i = 0; i < 400; ++i) {
    auto s = random_polyline(r, 60);
    const PlanarPoint shift{r.uniform(-3000, 3000), r.uniform(-3000, 3000)};
    for (auto& p : s.polyline) p = {p.x + shift.x, p.y + shift.y};
    s.id = std::to_string(i);
    s.road_class = i % 3 == 0 ? RoadClass::Major : RoadClass::Other;
    segs.push_back(s);
  }
  const RoadNetwork net(segs);
  for (int q = 0; q < 100; ++q) {
    const PlanarPoint c{r.uniform(-3000, 3000), r.uniform(-3000, 3000)};
    const double radius = r.uniform(24, 1000);
    const double scan = oracle::scan_length(segs, c, radius);
    CHECK(total_length_in_buffer(net, c, radius, ClassFilter::Any) == doctest::Approx(scan).epsilon(1e-9));
  }
}

TEST_CASE("nearest road uses the class filter and breaks ties by index") {
  std::vector<RoadSegment> segs{{"minor", {{0, 10}, {100, 10}}, RoadClass::Other},
                                {"major", {{0, -40}, {100, -40}}, RoadClass::Major},
                                {"major2", {{0, 40}, {100, 40}}, RoadClass::Major}};
  const RoadNetwork net(segs);
  const auto any = nearest_road({50, 0}, net, ClassFilter::Any);
  REQUIRE(any);
  CHECK(any->segment == 0);
  CHECK(any->distance == doctest::Approx(10.0));
  const auto major = nearest_road({50, 0}, net, ClassFilter::MajorOnly);
  REQUIRE(major);
  CHECK(major->segment == 1);
  const RoadNetwork minor_only(std::vector<RoadSegment>{segs[0]});
  CHECK_FALSE(nearest_road({0, 0}, minor_only, ClassFilter::MajorOnly).has_value());
  CHECK_THROWS_AS(distance_to_nearest({0, 0}, minor_only, ClassFilter::MajorOnly), NoRoadError);
}

TEST_CASE("geojson roads: classes, multilines and rejected features") {
  const GeoPoint origin{34.0, -117.4};
  const std::string text = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"road_class":"Primary_link","truck_aadt":1200,"veh_aadt":30000},
     "geometry":{"type":"LineString","coordinates":[[-117.40,34.00],[-117.39,34.00]]}},
    {"type":"Feature","properties":{"road_class":"residential"},
     "geometry":{"type":"MultiLineString","coordinates":[[[-117.40,34.01],[-117.40,34.02]],[[-117.41,34.01],[-117.42,34.01]]]}},
    {"type":"Feature","properties":{"road_class":"primary"},
     "geometry":{"type":"LineString","coordinates":[[-117.40,34.00],[-117.40,34.00]]}}
  ]})";
  const auto res = parse_roads_geojson(text, origin, RoadClassMap{});
  CHECK(res.features_in == 3);
  REQUIRE(res.segments.size() == 3);
  CHECK(res.segments[0].road_class == RoadClass::Major);
  CHECK(*res.segments[0].veh_aadt == 30000.0);
  CHECK(res.segments[1].road_class == RoadClass::Other);
  CHECK_FALSE(res.segments[1].truck_aadt.has_value());
  REQUIRE(res.rejected.size() == 1);
  CHECK(res.rejected[0].feature_index == 2);
  CHECK_THROWS_AS(parse_roads_geojson("{\"type\":\"Feature\"}", origin, RoadClassMap{}), DomainError);
  CHECK_THROWS_AS(parse_roads_geojson("not json", origin, RoadClassMap{}), DomainError);
}

TEST_CASE("esri ascii grid round trip and header forms") {
  RasterGrid g;
  g.origin = {100.0, 200.0};
  g.cell_size = 10.0;
  g.n_rows = 3;
  g.n_cols = 4;
  g.values = {1, 2, 3, 4, 5, 6, -9999, 8, 9, 10, 11, 12.25};
  const auto path = std::filesystem::temp_directory_path() / "lur_grid.asc";
  write_esri_ascii(path, g);
  const auto back = read_esri_ascii(path);
  CHECK(back.n_rows == 3);
  CHECK(back.n_cols == 4);
  CHECK(back.origin == g.origin);
  CHECK(back.values == g.values);
  CHECK(back.is_nodata(back.at(1, 2)));
  std::filesystem::remove(path);

  const auto centred = parse_esri_ascii(
      "ncols 2\nnrows 1\nxllcenter 5\nyllcenter 5\ncellsize 10\nNODATA_value -1\n1 2\n");
  CHECK(centred.origin == PlanarPoint{0.0, 0.0});
  CHECK_THROWS_AS(parse_esri_ascii("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n"), DomainError);
}

TEST_CASE("bilinear interpolation reproduces a plane and falls back near nodata") {
  RasterGrid g;
  g.origin = {0.0, 0.0};
  g.cell_size = 10.0;
  g.n_rows = 5;
  g.n_cols = 6;
  for (std::size_t r = 0; r < g.n_rows; ++r)
    for (std::size_t c = 0; c < g.n_cols; ++c) {
      const auto p = g.cell_center(r, c);
      g.values.push_back(2.0 * p.x + 3.0 * p.y + 1.0);
    }
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const PlanarPoint p{rng.uniform(5.0, 55.0), rng.uniform(5.0, 45.0)};
    const auto s = elevation_at(g, p);
    CHECK_FALSE(s.fallback);
    CHECK(s.value == doctest::Approx(2.0 * p.x + 3.0 * p.y + 1.0).epsilon(1e-12));
  }
  CHECK(elevation_at(g, {12.0, 48.0}).value == doctest::Approx(2.0 * 12.0 + 3.0 * 45.0 + 1.0));
  CHECK_THROWS_AS(elevation_at(g, {-1.0, 10.0}), DomainError);

  g.values[1 * g.n_cols + 2] = g.nodata;  // centre (25, 35)
  const auto s = elevation_at(g, {22.0, 32.0});
  CHECK(s.fallback);
  CHECK(std::isfinite(s.value));
}
