#include "lur/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "lur/csv.hpp"
#include "lur/stats.hpp"

namespace lur::forest {

namespace {

constexpr std::uint64_t kFoldStream = 0;

Matrix take_rows(const Matrix& X, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) std::ranges::copy(X.row(rows[i]), out.row(i).begin());
  return out;
}

}  // namespace

const MtryResult& CvReport::chosen() const {
  for (const auto& r : results)
    if (r.mtry == chosen_mtry) return r;
  throw DomainError("CvReport: chosen mtry missing from results");
}

std::vector<std::size_t> make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw DomainError("k must be >= 2");
  if (k > n) throw DomainError(fmt::format("k = {} exceeds the number of rows ({})", k, n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::stream(seed, kFoldStream);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> fold_of_row(n);
  for (std::size_t i = 0; i < n; ++i) fold_of_row[order[i]] = i % k;
  return fold_of_row;
}

std::vector<std::size_t> default_mtry_grid(std::size_t n_features, std::size_t cap) {
  if (n_features == 0) throw DomainError("default_mtry_grid: no features");
  std::vector<std::size_t> grid;
  if (n_features <= cap || cap < 2) {
    for (std::size_t m = 1; m <= std::min(n_features, std::max<std::size_t>(cap, 1)); ++m) grid.push_back(m);
    return grid;
  }
  for (std::size_t i = 0; i < cap; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(cap - 1);
    grid.push_back(1 + static_cast<std::size_t>(std::lround(t * static_cast<double>(n_features - 1))));
  }
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

CvReport cross_validate(const Matrix& X, std::span<const double> y, std::span<const std::size_t> mtry_grid,
                        std::size_t k, const ForestParams& params, std::uint64_t seed,
                        std::vector<std::string> feature_names, unsigned n_threads) {
  const std::size_t n = X.rows();
  if (y.size() != n) throw DomainError("cross_validate: X and y row counts differ");
  if (feature_names.empty())
    for (std::size_t c = 0; c < X.cols(); ++c) feature_names.push_back(fmt::format("x{}", c));

  CvReport report;
  report.k = k;
  report.seed = seed;
  report.fold_of_row = make_folds(n, k, seed);

  std::vector<std::size_t> grid;
  for (auto m : mtry_grid) {
    if (m < 1 || m > X.cols()) {
      report.warnings.push_back(fmt::format("mtry {} outside [1, {}] dropped", m, X.cols()));
      continue;
    }
    grid.push_back(m);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) throw DomainError("cross_validate: empty mtry grid");

  std::vector<std::vector<std::size_t>> train_rows(k), test_rows(k);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t f = 0; f < k; ++f) (report.fold_of_row[r] == f ? test_rows : train_rows)[f].push_back(r);

  std::vector<Matrix> train_X(k), test_X(k);
  std::vector<std::vector<double>> train_y(k), test_y(k);
  for (std::size_t f = 0; f < k; ++f) {
    train_X[f] = take_rows(X, train_rows[f]);
    test_X[f] = take_rows(X, test_rows[f]);
    for (auto r : train_rows[f]) train_y[f].push_back(y[r]);
    for (auto r : test_rows[f]) test_y[f].push_back(y[r]);
  }

  for (auto m : grid) {
    MtryResult res;
    res.mtry = m;
    res.oof_predictions.assign(n, 0.0);
    double rmse_sum = 0.0;
    double r2_sum = 0.0;
    std::size_t r2_count = 0;
    for (std::size_t f = 0; f < k; ++f) {
      ForestParams p = params;
      p.mtry = m;
      p.seed = derive_seed(seed, 1 + f);
      const Forest model = fit_forest(train_X[f], train_y[f], p, feature_names, n_threads);
      const auto pred = model.predict_rows(test_X[f]);
      for (std::size_t i = 0; i < pred.size(); ++i) res.oof_predictions[test_rows[f][i]] = pred[i];

      FoldResult fr{f, test_rows[f].size(), stats::rmse(pred, test_y[f]), stats::r2_correlation(pred, test_y[f])};
      rmse_sum += fr.rmse;
      if (fr.r2) {
        r2_sum += *fr.r2;
        ++r2_count;
      } else {
        ++res.undefined_r2_folds;
      }
      res.folds.push_back(fr);
    }
    res.mean_rmse = rmse_sum / static_cast<double>(k);
    if (r2_count > 0) res.mean_r2 = r2_sum / static_cast<double>(r2_count);
    if (res.undefined_r2_folds > 0)
      report.warnings.push_back(fmt::format("mtry {}: R² undefined in {} fold(s), excluded from the mean", m,
                                            res.undefined_r2_folds));
    res.pooled_r2 = stats::r2_correlation(res.oof_predictions, y);
    res.pooled_rmse = stats::rmse(res.oof_predictions, y);
    report.results.push_back(std::move(res));
  }

  const auto best = std::min_element(report.results.begin(), report.results.end(),
                                     [](const MtryResult& a, const MtryResult& b) { return a.mean_rmse < b.mean_rmse; });
  report.chosen_mtry = best->mtry;

  ForestParams final_params = params;
  final_params.mtry = report.chosen_mtry;
  report.final_model = fit_forest(X, y, final_params, std::move(feature_names), n_threads);
  const auto fitted = report.final_model.predict_rows(X);
  report.apparent_rmse = stats::rmse(fitted, y);
  report.apparent_r2 = stats::r2_correlation(fitted, y);
  report.apparent_r2_traditional = stats::r2_traditional(fitted, y);
  return report;
}

std::size_t ImportanceReport::rank_of(const std::string& feature) const {
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].feature == feature) return i;
  throw DomainError(fmt::format("feature '{}' not in importance report", feature));
}

ImportanceReport variable_importance(const Forest& forest, const Matrix& X, std::span<const double> y,
                                     std::size_t n_repeats, std::uint64_t seed) {
  if (n_repeats < 1) throw DomainError("n_repeats must be >= 1");
  if (X.cols() != forest.n_features()) throw DomainError("variable_importance: feature count mismatch");
  if (y.size() != X.rows()) throw DomainError("variable_importance: X and y row counts differ");

  ImportanceReport report;
  report.n_repeats = n_repeats;
  report.baseline_rmse = stats::rmse(forest.predict_rows(X), y);

  const std::size_t n = X.rows();
  Matrix shuffled = X;
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < X.cols(); ++j) {
    const auto column = X.column(j);
    double increase = 0.0;
    for (std::size_t r = 0; r < n_repeats; ++r) {
      Rng rng = Rng::stream(derive_seed(seed, j), r);
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t i = 0; i < n; ++i) shuffled(i, j) = column[order[i]];
      increase += stats::rmse(forest.predict_rows(shuffled), y) - report.baseline_rmse;
    }
    for (std::size_t i = 0; i < n; ++i) shuffled(i, j) = column[i];
    report.entries.push_back({forest.feature_names()[j], j, increase / static_cast<double>(n_repeats), 0.0});
  }

  const auto [lo, hi] = std::minmax_element(report.entries.begin(), report.entries.end(),
                                            [](const auto& a, const auto& b) { return a.raw < b.raw; });
  const double min_raw = lo->raw;
  const double span = hi->raw - min_raw;
  for (auto& e : report.entries) e.scaled = span > 0.0 ? 100.0 * (e.raw - min_raw) / span : 0.0;
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const auto& a, const auto& b) { return a.raw > b.raw; });
  return report;
}

void write_cv_csv(const std::filesystem::path& path, const CvReport& report) {
  csv::Writer out(path);
  out.row({"mtry", "mean_rmse_ppb", "mean_r2", "pooled_r2", "pooled_rmse_ppb", "undefined_r2_folds", "chosen",
           "fold_rmse_ppb"});
  for (const auto& r : report.results) {
    std::vector<std::string> folds;
    for (const auto& f : r.folds) folds.push_back(csv::format_number(f.rmse));
    out.row({std::to_string(r.mtry), csv::format_number(r.mean_rmse), csv::format_optional(r.mean_r2),
             csv::format_optional(r.pooled_r2), csv::format_number(r.pooled_rmse),
             std::to_string(r.undefined_r2_folds), r.mtry == report.chosen_mtry ? "1" : "0",
             fmt::format("{}", fmt::join(folds, ";"))});
  }
}

void write_importance_csv(const std::filesystem::path& path, const ImportanceReport& report) {
  csv::Writer out(path);
  out.row({"rank", "feature", "raw_importance_ppb", "scaled_importance"});
  for (std::size_t i = 0; i < report.entries.size(); ++i) {
    const auto& e = report.entries[i];
    out.row({std::to_string(i + 1), e.feature, csv::format_number(e.raw), csv::format_number(e.scaled)});
  }
}

}  // namespace lur::forest
