#include <doctest.h>

#include <numeric>

#include "../oracles.hpp"
#include "lur/diagnostics.hpp"
#include "lur/rng.hpp"

using namespace lur;
using namespace lur::diagnostics;

namespace {

const HourStamp kT0 = parse_hour("2018-04-01T00");

fusion::HourFit hour_with(HourStamp t, std::vector<std::pair<std::string, double>> residuals) {
  fusion::HourFit h;
  h.hour = t;
  h.a_hat = 1.0;
  for (auto& [id, e] : residuals) h.residuals.push_back({id, 10.0 + e, 10.0, e, 10.0});
  h.n_sites = h.residuals.size();
  return h;
}

}  // namespace

TEST_CASE("variance fractions sum to one and rank the noisy site first") {
  fusion::FusionSeries s;
  s.window_hours = 3;
  s.hours.push_back(hour_with(kT0, {{"a", 1.0}, {"b", 3.0}, {"c", 0.0}}));
  s.hours.push_back(hour_with(kT0 + 1, {{"a", -1.0}, {"b", -3.0}, {"c", 0.0}}));
  s.hours.push_back(hour_with(kT0 + 2, {{"a", 1.0}, {"b", 3.0}}));
  const std::vector<std::string> known{"a", "b", "c", "d"};
  const auto rep = site_variance_fractions(s, known);
  REQUIRE(rep.sites.size() == 3);
  double total = 0.0;
  for (const auto& v : rep.sites) total += v.fraction;
  CHECK(total == doctest::Approx(1.0));
  CHECK(rep.sites[0].sse == doctest::Approx(1.0));
  CHECK(rep.sites[1].sse == doctest::Approx(9.0));
  CHECK(rep.sites[1].fraction == doctest::Approx(0.9));
  CHECK(rep.sites[2].n_hours == 2);
  CHECK(rep.excluded == std::vector<std::string>{"d"});
  CHECK(rep.ranking() == std::vector<std::string>{"b", "a", "c"});
  CHECK_FALSE(rep.degenerate);
}

TEST_CASE("all-zero residuals are reported as degenerate") {
  fusion::FusionSeries s;
  s.hours.push_back(hour_with(kT0, {{"a", 0.0}, {"b", 0.0}}));
  const auto rep = site_variance_fractions(s);
  CHECK(rep.degenerate);
  for (const auto& v : rep.sites) CHECK(v.fraction == 0.0);
}

TEST_CASE("direction sectors") {
  CHECK(sector_of(0.0, 16) == 0);
  CHECK(sector_of(22.49, 16) == 0);
  CHECK(sector_of(22.5, 16) == 1);
  CHECK(sector_of(359.999, 16) == 15);
  CHECK_THROWS_AS(sector_of(360.0, 16), DomainError);  // ingest maps 360 to 0
  CHECK(sector_of(90.0, 4) == 1);
}

TEST_CASE("polar bins: calm first, sector-major, own wind before reference") {
  fusion::FusionSeries s;
  std::vector<HourlyRecord> wind;
  // a: north wind at 3 m/s, residual +2; b: no wind of its own; c: calm
  for (int h = 0; h < 4; ++h) {
    s.hours.push_back(hour_with(kT0 + h, {{"a", 2.0}, {"b", -1.0}, {"c", 5.0}}));
    wind.push_back({"a", kT0 + h, std::nullopt, std::nullopt, 3.0, 10.0});
    wind.push_back({"c", kT0 + h, std::nullopt, std::nullopt, 0.2, 180.0});
    wind.push_back({"b", kT0 + h, std::nullopt, std::nullopt, std::nullopt, std::nullopt});
  }
  const PolarOptions opts;
  CHECK_NOTHROW(opts.validate());
  const auto no_ref = polar_bin_means(s, WindTable(wind), opts);
  CHECK(no_ref.missing_wind == 4);
  CHECK(no_ref.binned == 8);
  CHECK(no_ref.bins.size() == 1 + 16 * 4);
  CHECK(no_ref.bins[0].calm);
  CHECK(*no_ref.bins[0].mean() == doctest::Approx(5.0));
  const auto idx = no_ref.locate({3.0, 10.0}, opts);
  CHECK(no_ref.bins[idx].sector == 0);
  CHECK(no_ref.bins[idx].speed_lo_ms == 2.0);
  CHECK(*no_ref.bins[idx].mean() == doctest::Approx(2.0));
  CHECK(no_ref.bins[idx].n == 4);
  CHECK(*no_ref.sector_mean(0) == doctest::Approx(2.0));
  CHECK_FALSE(no_ref.sector_mean(5).has_value());

  const WindTable with_ref(wind, std::string("a"));
  CHECK(with_ref.has_own_wind("a"));
  CHECK_FALSE(with_ref.has_own_wind("b"));
  CHECK(with_ref.lookup("b", kT0)->dir_deg == 10.0);
  CHECK(with_ref.lookup("c", kT0)->dir_deg == 180.0);
  const std::vector<std::string> only_b{"b"};
  const auto b = polar_bin_means(s, with_ref, opts, only_b, "b");
  CHECK(b.label == "b");
  CHECK(b.missing_wind == 0);
  CHECK(*b.sector_mean(0) == doctest::Approx(-1.0));

  PolarOptions bad;
  bad.speed_edges = {0.5, 2.0};
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("box statistics follow the type-7 quantiles") {
  Rng r(2);
  std::vector<HourlyRecord> recs;
  std::vector<double> values;
  const TimeWindow w{kT0, kT0 + 200};
  for (int h = 0; h < 200; ++h) {
    const double v = h == 17 ? 90.0 : 20.0 + 5.0 * r.normal();
    values.push_back(v);
    recs.push_back({"x", kT0 + h, v, std::nullopt, std::nullopt, std::nullopt});
  }
  const auto box = summary_stats(recs, w);
  REQUIRE(box.size() == 1);
  const auto& b = box[0];
  CHECK(b.n == 200);
  CHECK(b.median == doctest::Approx(oracle::quantile7(values, 0.5)));
  CHECK(b.p25 == doctest::Approx(oracle::quantile7(values, 0.25)));
  CHECK(b.p75 == doctest::Approx(oracle::quantile7(values, 0.75)));
  CHECK(b.max == 90.0);
  CHECK(b.whisker_hi < 90.0);
  CHECK(b.whisker_hi <= b.p75 + 1.5 * (b.p75 - b.p25));
  CHECK(b.whisker_lo >= b.p25 - 1.5 * (b.p75 - b.p25));
  REQUIRE(b.max_8h);
  CHECK(*b.max_8h > 20.0);
}

TEST_CASE("rolling 8-hour maximum needs six valid hours") {
  std::map<std::int64_t, double> hourly;
  const TimeWindow w{kT0, kT0 + 24};
  for (int h = 0; h < 24; ++h) hourly[kT0.hours + h] = 1.0;
  for (int h = 10; h < 15; ++h) hourly[kT0.hours + h] = 10.0;
  CHECK(*max_rolling_mean(hourly, w) == doctest::Approx((5 * 10.0 + 3 * 1.0) / 8.0));
  std::map<std::int64_t, double> sparse;
  for (int h = 0; h < 24; h += 2) sparse[kT0.hours + h] = 4.0;
  CHECK_FALSE(max_rolling_mean(sparse, w).has_value());
  sparse[kT0.hours + 1] = 4.0;
  sparse[kT0.hours + 3] = 4.0;
  CHECK(*max_rolling_mean(sparse, w) == doctest::Approx(4.0));
}

TEST_CASE("residual time series keeps gaps explicit") {
  fusion::FusionSeries s;
  s.hours.push_back(hour_with(kT0, {{"a", 1.0}}));
  s.hours.push_back(hour_with(kT0 + 2, {{"a", 2.0}}));
  const TimeWindow w{kT0, kT0 + 4};
  const std::vector<std::string> ids{"a"};
  const auto ts = residual_timeseries(s, ids, w);
  REQUIRE(ts.size() == 1);
  REQUIRE(ts[0].points.size() == 4);
  CHECK(*ts[0].points[0].residual == 1.0);
  CHECK_FALSE(ts[0].points[1].residual.has_value());
  CHECK(*ts[0].points[2].residual == 2.0);
  const std::vector<std::string> unknown{"zz"};
  CHECK_THROWS_AS(residual_timeseries(s, unknown, w), DomainError);
}
