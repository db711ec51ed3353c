#pragma once

#include <optional>
#include <span>
#include <vector>

namespace lur::stats {

double mean(std::span<const double> xs);

/// Population variance (divides by n).
double variance(std::span<const double> xs);

double sd(std::span<const double> xs);

/// Pearson product-moment correlation. nullopt when either input has zero
/// variance or fewer than two points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

double rmse(std::span<const double> predicted, std::span<const double> observed);

/// Squared Pearson correlation of predicted vs observed (caret convention).
std::optional<double> r2_correlation(std::span<const double> predicted, std::span<const double> observed);

/// 1 - SSE/SST. nullopt when observed has zero variance.
std::optional<double> r2_traditional(std::span<const double> predicted, std::span<const double> observed);

/// Quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7): h = (n-1)p, q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
/// `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

/// Copies, sorts and applies quantile_sorted.
double quantile(std::span<const double> xs, double p);

}  // namespace lur::stats
