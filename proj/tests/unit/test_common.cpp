#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "../oracles.hpp"
#include "lur/csv.hpp"
#include "lur/records.hpp"
#include "lur/rng.hpp"
#include "lur/stats.hpp"
#include "lur/time.hpp"

using namespace lur;

TEST_CASE("hour stamps parse in every accepted form and round-trip") {
  const auto t = parse_hour("2018-04-01T07");
  CHECK(parse_hour("2018-04-01T07:00") == t);
  CHECK(parse_hour("2018-04-01T07:00:00Z") == t);
  CHECK(parse_hour("2018-04-01 07:00:00") == t);
  CHECK(format_hour(t) == "2018-04-01T07:00:00Z");
  CHECK(format_hour_compact(t) == "20180401T07");
  CHECK(parse_hour(format_hour(t + 1000)) == t + 1000);
  CHECK_THROWS_AS(parse_hour("2018-04-01T07:30"), DomainError);
  CHECK_THROWS_AS(parse_hour("2018-02-30T00"), DomainError);
  CHECK_THROWS_AS(parse_hour("yesterday"), DomainError);
}

TEST_CASE("leap day and local hour of day") {
  CHECK(parse_hour("2020-03-01T00").hours - parse_hour("2020-02-28T00").hours == 48);
  // 14:00 UTC is 07:00 at UTC-7
  CHECK(local_hour_of_day(parse_hour("2018-05-10T14"), -7) == 7);
  CHECK(local_hour_of_day(parse_hour("2018-05-10T02"), -7) == 19);
  const TimeWindow w{parse_hour("2018-04-01T00"), parse_hour("2018-06-01T00")};
  CHECK(w.hours() == 1464);
  CHECK(w.contains(w.start));
  CHECK_FALSE(w.contains(w.end));
}

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(42), b(42), c = Rng::stream(42, 1);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  Rng d(42);
  CHECK(d() != c());
  CHECK(derive_seed(7, 0) != derive_seed(7, 1));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("uniform_below stays in range and covers it") {
  Rng r(3);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = r.uniform_below(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("shuffle is a permutation") {
  Rng r(11);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  r.shuffle(std::span<int>(v));
  auto s = v;
  std::sort(s.begin(), s.end());
  for (int i = 0; i < 50; ++i) CHECK(s[static_cast<std::size_t>(i)] == i);
}

TEST_CASE("type-7 quantiles of 1..100") {
  std::vector<double> xs(100);
  std::iota(xs.begin(), xs.end(), 1.0);
  CHECK(stats::quantile(xs, 0.5) == doctest::Approx(50.5).epsilon(1e-15));
  CHECK(stats::quantile(xs, 0.25) == doctest::Approx(25.75).epsilon(1e-15));
  CHECK(stats::quantile(xs, 0.75) == doctest::Approx(75.25).epsilon(1e-15));
  CHECK(stats::quantile(xs, 0.0) == 1.0);
  CHECK(stats::quantile(xs, 1.0) == 100.0);
}

TEST_CASE("quantile matches the direct definition on random samples") {
  Rng r(5);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> xs(1 + r.uniform_below(40));
    for (auto& x : xs) x = r.normal();
    const double p = r.uniform01();
    CHECK(stats::quantile(xs, p) == doctest::Approx(oracle::quantile7(xs, p)).epsilon(1e-12));
  }
}

TEST_CASE("pearson, rmse and both R² conventions") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 6, 8, 10};
  CHECK(*stats::pearson(x, y) == doctest::Approx(1.0));
  CHECK_FALSE(stats::pearson(x, std::vector<double>(5, 3.0)).has_value());
  CHECK(stats::rmse(x, x) == 0.0);
  // a biased predictor is perfectly correlated but not perfectly accurate
  std::vector<double> shifted{3, 4, 5, 6, 7};
  CHECK(*stats::r2_correlation(shifted, x) == doctest::Approx(1.0));
  CHECK(*stats::r2_traditional(shifted, x) < 0.0);
  CHECK(stats::variance(x) == doctest::Approx(2.0));
}

TEST_CASE("csv splitting and number round trip") {
  const auto f = csv::split_line(R"(a,"b,c","d ""q""",)");
  REQUIRE(f.size() == 4);
  CHECK(f[1] == "b,c");
  CHECK(f[2] == "d \"q\"");
  CHECK(f[3].empty());
  Rng r(9);
  for (int i = 0; i < 1000; ++i) {
    const double v = r.normal() * std::pow(10.0, static_cast<double>(r.uniform_below(20)) - 10.0);
    CHECK(*csv::parse_optional_double(csv::format_number(v)) == v);
  }
  CHECK_FALSE(csv::parse_optional_double("").has_value());
  CHECK_THROWS_AS(csv::parse_optional_double("12abc"), DomainError);
}

TEST_CASE("csv writer and reader agree") {
  const auto path = std::filesystem::temp_directory_path() / "lur_csv_roundtrip.csv";
  {
    csv::Writer w(path);
    w.row({"id", "value"});
    w.row({"a,b", "1.5"});
  }
  const auto t = csv::read(path);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].fields[t.require("id")] == "a,b");
  CHECK(t.rows[0].line == 2);
  CHECK_FALSE(t.find("missing").has_value());
  std::filesystem::remove(path);
}

TEST_CASE("pollutant names") {
  CHECK(parse_pollutant("no2") == Pollutant::NO2);
  CHECK(to_string(Pollutant::O3) == "O3");
  CHECK_THROWS_AS(parse_pollutant("PM25"), DomainError);
}
