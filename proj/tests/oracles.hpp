// Slow, obviously-correct reference implementations used by the unit and
// acceptance tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lur/common.hpp"
#include "lur/geo.hpp"

namespace oracle {

/// Road length inside a disk by walking each edge in steps of `step`
/// metres and counting the steps whose midpoint is inside.
inline double sampled_clip_length(const lur::geo::RoadSegment& seg, lur::geo::PlanarPoint c, double r,
                                  double step = 0.01) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < seg.polyline.size(); ++i) {
    const auto a = seg.polyline[i];
    const auto b = seg.polyline[i + 1];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const auto n = static_cast<std::size_t>(std::ceil(len / step));
    const double h = len / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
      const double x = a.x + t * (b.x - a.x) - c.x;
      const double y = a.y + t * (b.y - a.y) - c.y;
      if (x * x + y * y <= r * r) total += h;
    }
  }
  return total;
}

inline double scan_length(const std::vector<lur::geo::RoadSegment>& segs, lur::geo::PlanarPoint c, double r) {
  double total = 0.0;
  for (const auto& s : segs) total += lur::geo::clip_length_in_circle(s, c, r);
  return total;
}

inline double sse_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double reduction = 0.0;
};

/// SSE reduction of sending x[f] <= t left, computed from scratch.
inline double split_reduction(const lur::Matrix& X, std::span<const double> y, std::size_t f, double t) {
  std::vector<double> all(y.begin(), y.end()), left, right;
  for (std::size_t r = 0; r < X.rows(); ++r) (X(r, f) <= t ? left : right).push_back(y[r]);
  return sse_of(all) - sse_of(left) - sse_of(right);
}

/// Best root split over every feature and every midpoint between distinct
/// sorted values; ties keep the earliest (feature, threshold).
inline Split exhaustive_root_split(const lur::Matrix& X, std::span<const double> y) {
  Split best;
  for (std::size_t f = 0; f < X.cols(); ++f) {
    auto xs = X.column(f);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      const double t = xs[i] + (xs[i + 1] - xs[i]) / 2.0;
      const double red = split_reduction(X, y, f, t);
      if (red > best.reduction * (1.0 + 1e-12) + 1e-300) best = {static_cast<int>(f), t, red};
    }
  }
  return best;
}

/// Through-origin least squares, written out.
inline double origin_slope(std::span<const double> c, std::span<const double> y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    num += y[i] * c[i];
    den += c[i] * c[i];
  }
  return num / den;
}

/// Type-7 quantile by direct definition.
inline double quantile7(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - std::floor(h)) * (xs[hi] - xs[lo]);
}

inline std::size_t grid_cells_along(double extent, double res) {
  return static_cast<std::size_t>(std::ceil(extent / res - 1e-9));
}

}  // namespace oracle
