#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lur/forest.hpp"

namespace lur::forest {

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n = 0;
  double rmse = 0.0;
  std::optional<double> r2;  // squared Pearson; undefined for constant folds
};

struct MtryResult {
  std::size_t mtry = 0;
  std::vector<FoldResult> folds;
  double mean_rmse = 0.0;
  std::optional<double> mean_r2;  // over folds with a defined R²
  std::size_t undefined_r2_folds = 0;
  std::optional<double> pooled_r2;  // squared Pearson over all out-of-fold predictions
  double pooled_rmse = 0.0;
  std::vector<double> oof_predictions;
};

struct CvReport {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> fold_of_row;
  std::vector<MtryResult> results;  // ascending mtry
  std::size_t chosen_mtry = 0;
  double apparent_rmse = 0.0;
  std::optional<double> apparent_r2;
  std::optional<double> apparent_r2_traditional;
  std::vector<std::string> warnings;
  Forest final_model;

  [[nodiscard]] const MtryResult& chosen() const;
};

/// Fold index for each of n rows: a seeded shuffle dealt round-robin, so
/// fold sizes differ by at most one.
std::vector<std::size_t> make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

/// {1..n_features}, thinned to at most `cap` evenly spaced values that
/// always include 1 and n_features.
std::vector<std::size_t> default_mtry_grid(std::size_t n_features, std::size_t cap = 25);

/// Grid search over mtry by k-fold CV with RMSE as the metric.
///
/// Every mtry value sees the same folds and the same per-fold forest seed.
/// The chosen mtry minimises mean fold RMSE (ties to the smaller value) and
/// the final model is refit on all rows with params.seed. Grid values
/// outside [1, n_features] are dropped with a warning. Throws DomainError
/// when k < 2, k > n or no grid value survives.
CvReport cross_validate(const Matrix& X, std::span<const double> y, std::span<const std::size_t> mtry_grid,
                        std::size_t k, const ForestParams& params, std::uint64_t seed,
                        std::vector<std::string> feature_names = {}, unsigned n_threads = 0);

struct ImportanceEntry {
  std::string feature;
  std::size_t index = 0;
  double raw = 0.0;     // mean RMSE increase, ppb
  double scaled = 0.0;  // min -> 0, max -> 100
};

struct ImportanceReport {
  double baseline_rmse = 0.0;
  std::size_t n_repeats = 0;
  std::vector<ImportanceEntry> entries;  // descending raw importance

  [[nodiscard]] std::size_t rank_of(const std::string& feature) const;  // 0-based; throws if absent
};

/// Permutation importance: rise in forest RMSE on (X, y) after shuffling
/// one column, averaged over n_repeats shuffles.
ImportanceReport variable_importance(const Forest& forest, const Matrix& X, std::span<const double> y,
                                     std::size_t n_repeats, std::uint64_t seed);

// CSV reports.
void write_cv_csv(const std::filesystem::path& path, const CvReport& report);
void write_importance_csv(const std::filesystem::path& path, const ImportanceReport& report);

}  // namespace lur::forest
