#include <doctest.h>

#include <filesystem>
#include <map>
#include <numeric>

#include "../oracles.hpp"
#include "lur/forest.hpp"
#include "lur/stats.hpp"
#include "lur/validation.hpp"

using namespace lur;
using namespace lur::forest;

namespace {

struct Data {
  Matrix X;
  std::vector<double> y;
};

Data make_data(Rng& r, std::size_t n, std::size_t p) {
  Data d{Matrix(n, p), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) d.X(i, j) = r.uniform(-1, 1);
    d.y[i] = 3.0 * d.X(i, 0) - 2.0 * (d.X(i, 1 % p) > 0.2) + 0.3 * r.normal();
  }
  return d;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

}  // namespace

TEST_CASE("root split matches exhaustive CART") {
  Rng r(31);
  for (int rep = 0; rep < 10; ++rep) {
    const auto n = 10 + r.uniform_below(60);
    const auto p = 1 + r.uniform_below(6);
    const auto d = make_data(r, n, p);
    ForestParams params{.n_trees = 1, .mtry = p, .min_node_size = 5, .bootstrap = false, .seed = 1};
    Rng tree_rng(9);
    const auto rows = all_rows(n);
    const auto tree = fit_tree(d.X, d.y, rows, params, tree_rng);
    const auto best = oracle::exhaustive_root_split(d.X, d.y);
    REQUIRE_FALSE(tree.root().is_leaf());
    CHECK(tree.root().feature == best.feature);
    CHECK(oracle::split_reduction(d.X, d.y, static_cast<std::size_t>(tree.root().feature), tree.root().threshold) ==
          doctest::Approx(best.reduction).epsilon(1e-12));
  }
}

TEST_CASE("leaves: constant targets, small nodes, fully grown trees") {
  Rng r(1);
  const auto d = make_data(r, 30, 3);
  const auto rows = all_rows(30);
  ForestParams params{.n_trees = 1, .mtry = 3, .min_node_size = 1, .bootstrap = false, .seed = 1};
  const auto full = fit_tree(d.X, d.y, rows, params, r);
  for (std::size_t i = 0; i < 30; ++i) CHECK(full.predict(d.X.row(i)) == doctest::Approx(d.y[i]));
  CHECK(full.sse(d.X, d.y, rows) == doctest::Approx(0.0));

  params.min_node_size = 30;
  const auto stump = fit_tree(d.X, d.y, rows, params, r);
  CHECK(stump.nodes().size() == 1);
  CHECK(stump.root().value == doctest::Approx(stats::mean(d.y)));

  const std::vector<double> flat(30, 4.0);
  params.min_node_size = 1;
  const auto leaf = fit_tree(d.X, flat, rows, params, r);
  CHECK(leaf.nodes().size() == 1);
}

TEST_CASE("every node obeys the split invariants") {
  Rng r(12);
  const auto d = make_data(r, 80, 4);
  const auto forest = fit_forest(d.X, d.y, {.n_trees = 20, .mtry = 2, .min_node_size = 5, .bootstrap = true, .seed = 3});
  for (const auto& t : forest.trees()) {
    const auto& nodes = t.nodes();
    for (const auto& n : nodes) {
      if (n.is_leaf()) continue;
      const auto& l = nodes[static_cast<std::size_t>(n.left)];
      const auto& rt = nodes[static_cast<std::size_t>(n.right)];
      CHECK(l.n + rt.n == n.n);
      CHECK(n.n > 5);
      CHECK((l.value * static_cast<double>(l.n) + rt.value * static_cast<double>(rt.n)) / static_cast<double>(n.n) ==
            doctest::Approx(n.value));
    }
  }
}

TEST_CASE("forest is independent of the thread count and seeded") {
  Rng r(5);
  const auto d = make_data(r, 60, 5);
  ForestParams params{.n_trees = 64, .mtry = 2, .min_node_size = 5, .bootstrap = true, .seed = 77};
  const auto one = fit_forest(d.X, d.y, params, {}, 1);
  const auto four = fit_forest(d.X, d.y, params, {}, 4);
  CHECK(to_json(one) == to_json(four));
  params.seed = 78;
  CHECK(to_json(fit_forest(d.X, d.y, params, {}, 1)) != to_json(one));
}

TEST_CASE("forest serialization round trip is exact") {
  Rng r(6);
  const auto d = make_data(r, 40, 3);
  const auto f = fit_forest(d.X, d.y, {.n_trees = 25, .mtry = 2, .min_node_size = 3, .bootstrap = true, .seed = 2},
                            {"a", "b", "c"});
  const auto path = std::filesystem::temp_directory_path() / "lur_forest.json";
  save_forest(path, f);
  const auto back = load_forest(path);
  std::filesystem::remove(path);
  CHECK(to_json(back) == to_json(f));
  for (std::size_t i = 0; i < 40; ++i) CHECK(back.predict(d.X.row(i)) == f.predict(d.X.row(i)));
  CHECK_NOTHROW(back.check_feature_names({"a", "b", "c"}));
  CHECK_THROWS_AS(back.check_feature_names({"b", "a", "c"}), DomainError);
  CHECK_THROWS_AS(back.predict(std::vector<double>{1.0}), DomainError);
  auto j = to_json(f);
  j["format_version"] = 99;
  CHECK_THROWS_AS(forest_from_json(j), DomainError);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((ForestParams{.mtry = 0}.validate(3)), DomainError);
  CHECK_THROWS_AS((ForestParams{.mtry = 4}.validate(3)), DomainError);
  CHECK_THROWS_AS((ForestParams{.n_trees = 0}.validate(3)), DomainError);
  CHECK_NOTHROW((ForestParams{.mtry = 3}.validate(3)));
}

TEST_CASE("folds: 31 rows in 10 folds are nine of 3 and one of 4") {
  const auto folds = make_folds(31, 10, 123);
  REQUIRE(folds.size() == 31);
  std::map<std::size_t, int> sizes;
  for (auto f : folds) ++sizes[f];
  CHECK(sizes.size() == 10);
  std::map<int, int> histogram;
  for (auto [f, s] : sizes) ++histogram[s];
  CHECK(histogram[3] == 9);
  CHECK(histogram[4] == 1);
  CHECK(make_folds(31, 10, 123) == folds);
  CHECK(make_folds(31, 10, 124) != folds);
}

TEST_CASE("default mtry grid") {
  CHECK(default_mtry_grid(4) == std::vector<std::size_t>{1, 2, 3, 4});
  const auto g = default_mtry_grid(100, 25);
  CHECK(g.size() <= 25);
  CHECK(g.front() == 1);
  CHECK(g.back() == 100);
  CHECK(std::is_sorted(g.begin(), g.end()));
}

TEST_CASE("cross validation: leakage, grid filtering and the chosen mtry") {
  Rng r(10);
  auto d = make_data(r, 31, 4);
  for (std::size_t i = 0; i < 31; ++i) d.X(i, 3) = d.y[i];
  const std::vector<std::size_t> grid{4, 0, 9};
  const auto cv = cross_validate(d.X, d.y, grid, 10,
                                 {.n_trees = 200, .mtry = 1, .min_node_size = 1, .bootstrap = false, .seed = 4}, 99);
  REQUIRE(cv.results.size() == 1);
  CHECK(cv.warnings.size() == 2);
  CHECK(cv.chosen_mtry == 4);
  CHECK(cv.chosen().mean_rmse < 0.5 * stats::sd(d.y));
  CHECK(cv.chosen().oof_predictions.size() == 31);
  CHECK_THROWS_AS(cross_validate(d.X, d.y, grid, 40, {}, 1), DomainError);
  CHECK_THROWS_AS(cross_validate(d.X, d.y, std::vector<std::size_t>{7}, 10, {}, 1), DomainError);

  const std::vector<std::size_t> all{1, 2, 3, 4};
  const auto many = cross_validate(d.X, d.y, all, 5, {.n_trees = 50, .seed = 4}, 1);
  double best = 1e300;
  for (const auto& m : many.results) best = std::min(best, m.mean_rmse);
  CHECK(many.chosen().mean_rmse == best);
  CHECK(many.fold_of_row == make_folds(31, 5, 1));
}

TEST_CASE("permutation importance ranks the signal first") {
  Rng r(21);
  const std::size_t n = 60;
  Matrix X(n, 3);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) X(i, j) = r.uniform(0, 1);
    y[i] = 10 * X(i, 1) + 0.1 * r.normal();
  }
  const auto f = fit_forest(X, y, {.n_trees = 100, .mtry = 2, .seed = 8}, {"noise_a", "signal", "noise_b"});
  const auto imp = variable_importance(f, X, y, 5, 3);
  CHECK(imp.entries.front().feature == "signal");
  CHECK(imp.rank_of("signal") == 0);
  CHECK(imp.entries.front().scaled == 100.0);
  CHECK(imp.entries.back().scaled == 0.0);
  CHECK(imp.baseline_rmse == doctest::Approx(stats::rmse(f.predict_rows(X), y)));
  CHECK_THROWS(imp.rank_of("absent"));
  const auto again = variable_importance(f, X, y, 5, 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again.entries[i].raw == imp.entries[i].raw);
}
