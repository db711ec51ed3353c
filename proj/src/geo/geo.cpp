#include "lur/geo.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>
#include <fmt/format.h>

namespace lur::geo {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double point_segment_distance(PlanarPoint p, PlanarPoint a, PlanarPoint b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

double point_box_distance(PlanarPoint p, const Box& box) {
  const double dx = std::max({box.min.x - p.x, 0.0, p.x - box.max.x});
  const double dy = std::max({box.min.y - p.y, 0.0, p.y - box.max.y});
  return std::hypot(dx, dy);
}

Box bounds(const RoadSegment& seg) {
  Box b{seg.polyline.front(), seg.polyline.front()};
  for (const auto& p : seg.polyline) {
    b.min.x = std::min(b.min.x, p.x);
    b.min.y = std::min(b.min.y, p.y);
    b.max.x = std::max(b.max.x, p.x);
    b.max.y = std::max(b.max.y, p.y);
  }
  return b;
}

}  // namespace

bool GeoPoint::valid() const {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
}

double distance(PlanarPoint a, PlanarPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

PlanarPoint project(GeoPoint p, GeoPoint origin) {
  if (!p.valid() || !origin.valid())
    throw DomainError(fmt::format("invalid coordinates ({}, {}) / origin ({}, {})", p.lat, p.lon, origin.lat,
                                  origin.lon));
  const double k = kEarthRadius * kDegToRad;
  return {(p.lon - origin.lon) * std::cos(origin.lat * kDegToRad) * k, (p.lat - origin.lat) * k};
}

GeoPoint unproject(PlanarPoint p, GeoPoint origin) {
  if (!origin.valid() || !std::isfinite(p.x) || !std::isfinite(p.y))
    throw DomainError("unproject: invalid input");
  const double k = kEarthRadius * kDegToRad;
  return {origin.lat + p.y / k, origin.lon + p.x / (std::cos(origin.lat * kDegToRad) * k)};
}

GeoPoint bbox_centroid(std::span<const GeoPoint> points) {
  if (points.empty()) throw DomainError("bbox_centroid: no points");
  double lat_lo = points.front().lat, lat_hi = lat_lo;
  double lon_lo = points.front().lon, lon_hi = lon_lo;
  for (const auto& p : points) {
    if (!p.valid()) throw DomainError("bbox_centroid: invalid point");
    lat_lo = std::min(lat_lo, p.lat);
    lat_hi = std::max(lat_hi, p.lat);
    lon_lo = std::min(lon_lo, p.lon);
    lon_hi = std::max(lon_hi, p.lon);
  }
  return {0.5 * (lat_lo + lat_hi), 0.5 * (lon_lo + lon_hi)};
}

void RoadSegment::validate() const {
  if (polyline.size() < 2) throw DomainError(fmt::format("road '{}' has fewer than 2 points", id));
  for (std::size_t i = 0; i < polyline.size(); ++i) {
    if (!std::isfinite(polyline[i].x) || !std::isfinite(polyline[i].y))
      throw DomainError(fmt::format("road '{}' has a non-finite coordinate", id));
    if (i > 0 && polyline[i] == polyline[i - 1])
      throw DomainError(fmt::format("road '{}' repeats vertex {}", id, i));
  }
}

double RoadSegment::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) total += distance(polyline[i - 1], polyline[i]);
  return total;
}

double clip_length_in_circle(const RoadSegment& seg, PlanarPoint center, double radius) {
  if (!(radius > 0.0)) throw DomainError("clip_length_in_circle: radius must be positive");
  const double r2 = radius * radius;
  double total = 0.0;
  for (std::size_t i = 1; i < seg.polyline.size(); ++i) {
    const PlanarPoint a = seg.polyline[i - 1];
    const PlanarPoint b = seg.polyline[i];
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double fx = a.x - center.x;
    const double fy = a.y - center.y;
    // |a + t d - c|^2 = r^2  ->  A t^2 + 2 B t + C = 0
    const double qa = dx * dx + dy * dy;
    const double qb = fx * dx + fy * dy;
    const double qc = fx * fx + fy * fy - r2;
    if (qa <= 0.0) continue;
    const double disc = qb * qb - qa * qc;
    if (disc <= 0.0) continue;
    const double root = std::sqrt(disc);
    const double t_lo = std::max(0.0, (-qb - root) / qa);
    const double t_hi = std::min(1.0, (-qb + root) / qa);
    if (t_hi > t_lo) total += (t_hi - t_lo) * std::sqrt(qa);
  }
  return total;
}

double distance_to_polyline(const RoadSegment& seg, PlanarPoint p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < seg.polyline.size(); ++i)
    best = std::min(best, point_segment_distance(p, seg.polyline[i - 1], seg.polyline[i]));
  if (seg.polyline.size() == 1) best = distance(p, seg.polyline.front());
  return best;
}

struct RoadNetwork::Index {
  using BPoint = bg::model::point<double, 2, bg::cs::cartesian>;
  using BBox = bg::model::box<BPoint>;
  using Value = std::pair<BBox, std::size_t>;
  bgi::rtree<Value, bgi::rstar<16>> tree;

  static BBox to_bbox(const Box& b) { return {BPoint(b.min.x, b.min.y), BPoint(b.max.x, b.max.y)}; }
  static Box to_box(const BBox& b) {
    return {{b.min_corner().get<0>(), b.min_corner().get<1>()}, {b.max_corner().get<0>(), b.max_corner().get<1>()}};
  }
};

RoadNetwork::RoadNetwork() : index_(std::make_unique<Index>()) {}

RoadNetwork::RoadNetwork(std::vector<RoadSegment> segments) : segments_(std::move(segments)) {
  std::vector<Index::Value> values;
  values.reserve(segments_.size());
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    segments_[i].validate();
    const Box b = bounds(segments_[i]);
    values.emplace_back(Index::to_bbox(b), i);
    if (!extent_) {
      extent_ = b;
    } else {
      extent_->min.x = std::min(extent_->min.x, b.min.x);
      extent_->min.y = std::min(extent_->min.y, b.min.y);
      extent_->max.x = std::max(extent_->max.x, b.max.x);
      extent_->max.y = std::max(extent_->max.y, b.max.y);
    }
  }
  // Range constructor uses the packing (bulk-load) algorithm.
  index_ = std::make_unique<Index>(Index{decltype(Index::tree)(values.begin(), values.end())});
}

RoadNetwork::~RoadNetwork() = default;
RoadNetwork::RoadNetwork(RoadNetwork&&) noexcept = default;
RoadNetwork& RoadNetwork::operator=(RoadNetwork&&) noexcept = default;

std::vector<std::size_t> RoadNetwork::candidates(PlanarPoint center, double radius) const {
  std::vector<std::size_t> out;
  if (segments_.empty()) return out;
  const Box query{{center.x - radius, center.y - radius}, {center.x + radius, center.y + radius}};
  for (auto it = index_->tree.qbegin(bgi::intersects(Index::to_bbox(query))); it != index_->tree.qend(); ++it) {
    if (point_box_distance(center, Index::to_box(it->first)) <= radius) out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<NearestRoad> RoadNetwork::nearest(PlanarPoint center, ClassFilter filter) const {
  std::optional<NearestRoad> best;
  if (segments_.empty()) return best;
  const Index::BPoint q(center.x, center.y);
  for (auto it = index_->tree.qbegin(bgi::nearest(q, static_cast<unsigned>(segments_.size())));
       it != index_->tree.qend(); ++it) {
    const double box_d = point_box_distance(center, Index::to_box(it->first));
    if (best && box_d > best->distance) break;
    const auto& seg = segments_[it->second];
    if (!passes(seg, filter)) continue;
    const double d = distance_to_polyline(seg, center);
    if (!best || d < best->distance || (d == best->distance && it->second < best->segment))
      best = NearestRoad{it->second, d};
  }
  return best;
}

double total_length_in_buffer(const RoadNetwork& network, PlanarPoint center, double radius, ClassFilter filter) {
  if (!(radius > 0.0)) throw DomainError("total_length_in_buffer: radius must be positive");
  double total = 0.0;
  for (std::size_t i : network.candidates(center, radius)) {
    const auto& seg = network.segments()[i];
    if (passes(seg, filter)) total += clip_length_in_circle(seg, center, radius);
  }
  return total;
}

std::optional<NearestRoad> nearest_road(PlanarPoint center, const RoadNetwork& network, ClassFilter filter) {
  return network.nearest(center, filter);
}

double distance_to_nearest(PlanarPoint center, const RoadNetwork& network, ClassFilter filter) {
  const auto hit = network.nearest(center, filter);
  if (!hit) throw NoRoadError("no road segment satisfies the class filter");
  return hit->distance;
}

void RasterGrid::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw DomainError("raster grid: cell_size must be > 0");
  if (n_rows == 0 || n_cols == 0) throw DomainError("raster grid: empty");
  if (values.size() != n_rows * n_cols) throw DomainError("raster grid: value count does not match dimensions");
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) throw DomainError("raster grid: non-finite origin");
}

PlanarPoint RasterGrid::cell_center(std::size_t row, std::size_t col) const {
  return {origin.x + (static_cast<double>(col) + 0.5) * cell_size,
          origin.y + (static_cast<double>(n_rows - row) - 0.5) * cell_size};
}

Box RasterGrid::extent() const {
  return {origin,
          {origin.x + static_cast<double>(n_cols) * cell_size, origin.y + static_cast<double>(n_rows) * cell_size}};
}

namespace {

double nearest_valid(const ElevationGrid& g, double fcol, double frow) {
  // fcol/frow are continuous cell-centre coordinates (col index, row index).
  double best_d = std::numeric_limits<double>::infinity();
  double best_v = 0.0;
  bool found = false;
  const auto max_ring = std::max(g.n_rows, g.n_cols);
  const auto c0 = static_cast<std::ptrdiff_t>(std::lround(fcol));
  const auto r0 = static_cast<std::ptrdiff_t>(std::lround(frow));
  for (std::size_t ring = 0; ring <= max_ring; ++ring) {
    const auto k = static_cast<std::ptrdiff_t>(ring);
    for (std::ptrdiff_t r = r0 - k; r <= r0 + k; ++r) {
      for (std::ptrdiff_t c = c0 - k; c <= c0 + k; ++c) {
        if (std::max(std::abs(r - r0), std::abs(c - c0)) != k) continue;
        if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(g.n_rows) || c >= static_cast<std::ptrdiff_t>(g.n_cols))
          continue;
        const double v = g.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        if (g.is_nodata(v)) continue;
        const double d = std::hypot(static_cast<double>(c) - fcol, static_cast<double>(r) - frow);
        if (d < best_d) {
          best_d = d;
          best_v = v;
          found = true;
        }
      }
    }
    // Cells in the next ring are at least ring + 0.5 cells from the query.
    if (found && best_d <= static_cast<double>(ring) + 0.5) break;
  }
  if (!found) throw DomainError("elevation grid has no valid cells");
  return best_v;
}

}  // namespace

ElevationSample elevation_at(const ElevationGrid& grid, PlanarPoint p) {
  const Box ext = grid.extent();
  if (!(p.x >= ext.min.x && p.x <= ext.max.x && p.y >= ext.min.y && p.y <= ext.max.y))
    throw DomainError(fmt::format("point ({}, {}) outside elevation grid extent", p.x, p.y));

  // Continuous indices where integer values sit on cell centres.
  const double fcol = (p.x - grid.origin.x) / grid.cell_size - 0.5;
  const double frow = (ext.max.y - p.y) / grid.cell_size - 0.5;
  const double max_col = static_cast<double>(grid.n_cols - 1);
  const double max_row = static_cast<double>(grid.n_rows - 1);
  const double cc = std::clamp(fcol, 0.0, max_col);
  const double rr = std::clamp(frow, 0.0, max_row);

  const auto c0 = static_cast<std::size_t>(std::floor(cc));
  const auto r0 = static_cast<std::size_t>(std::floor(rr));
  const std::size_t c1 = std::min(c0 + 1, grid.n_cols - 1);
  const std::size_t r1 = std::min(r0 + 1, grid.n_rows - 1);
  const double tx = cc - static_cast<double>(c0);
  const double ty = rr - static_cast<double>(r0);

  const double v00 = grid.at(r0, c0);
  const double v01 = grid.at(r0, c1);
  const double v10 = grid.at(r1, c0);
  const double v11 = grid.at(r1, c1);
  if (grid.is_nodata(v00) || grid.is_nodata(v01) || grid.is_nodata(v10) || grid.is_nodata(v11))
    return {nearest_valid(grid, cc, rr), true};

  // Exact cell-centre hits return the stored value untouched.
  if (tx == 0.0 && ty == 0.0) return {v00, false};
  const double top = v00 + tx * (v01 - v00);
  const double bottom = v10 + tx * (v11 - v10);
  return {top + ty * (bottom - top), false};
}

}  // namespace lur::geo
