#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lur/common.hpp"

namespace lur::geo {

/// Mean Earth radius (IUGG), metres.
inline constexpr double kEarthRadius = 6371008.8;

/// WGS84 degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  [[nodiscard]] bool valid() const;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Metres east (x) and north (y) of a projection origin.
struct PlanarPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

double distance(PlanarPoint a, PlanarPoint b);

/// Local equirectangular projection about `origin`:
///   x = (lon - lon0) cos(lat0) R pi/180,  y = (lat - lat0) R pi/180.
/// Throws DomainError for invalid coordinates.
PlanarPoint project(GeoPoint p, GeoPoint origin);

/// Inverse of project.
GeoPoint unproject(PlanarPoint p, GeoPoint origin);

/// Centre of the lat/lon bounding box of `points`.
GeoPoint bbox_centroid(std::span<const GeoPoint> points);

enum class RoadClass { Major, Other };

struct RoadSegment {
  std::string id;
  std::vector<PlanarPoint> polyline;
  RoadClass road_class = RoadClass::Other;
  std::optional<double> truck_aadt;
  std::optional<double> veh_aadt;

  /// Throws DomainError unless there are >= 2 points, consecutive points
  /// differ and all coordinates are finite.
  void validate() const;
  [[nodiscard]] double length() const;
};

struct Box {
  PlanarPoint min;
  PlanarPoint max;

  [[nodiscard]] bool contains_disk(PlanarPoint c, double r) const {
    return c.x - r >= min.x && c.x + r <= max.x && c.y - r >= min.y && c.y + r <= max.y;
  }
};

/// Length of the part of the polyline inside the closed disk, computed
/// analytically edge by edge.
double clip_length_in_circle(const RoadSegment& seg, PlanarPoint center, double radius);

/// Shortest Euclidean distance from a point to a polyline.
double distance_to_polyline(const RoadSegment& seg, PlanarPoint p);

enum class ClassFilter { Any, MajorOnly };

[[nodiscard]] inline bool passes(const RoadSegment& seg, ClassFilter f) {
  return f == ClassFilter::Any || seg.road_class == RoadClass::Major;
}

struct NearestRoad {
  std::size_t segment = 0;
  double distance = 0.0;
};

/// Immutable road network with a bulk-loaded R-tree over segment bounding
/// boxes. Queries are const and safe to call concurrently.
class RoadNetwork {
 public:
  RoadNetwork();
  explicit RoadNetwork(std::vector<RoadSegment> segments);
  ~RoadNetwork();
  RoadNetwork(RoadNetwork&&) noexcept;
  RoadNetwork& operator=(RoadNetwork&&) noexcept;

  [[nodiscard]] const std::vector<RoadSegment>& segments() const { return segments_; }
  [[nodiscard]] bool empty() const { return segments_.empty(); }

  /// Bounding box of every segment; nullopt for an empty network.
  [[nodiscard]] std::optional<Box> extent() const { return extent_; }

  /// Indices (ascending, no duplicates) of segments whose bounding box
  /// intersects the disk. A superset of the segments that touch the disk.
  [[nodiscard]] std::vector<std::size_t> candidates(PlanarPoint center, double radius) const;

  /// Best-first search over the index by bounding-box distance.
  [[nodiscard]] std::optional<NearestRoad> nearest(PlanarPoint center, ClassFilter filter) const;

 private:
  struct Index;
  std::vector<RoadSegment> segments_;
  std::optional<Box> extent_;
  std::unique_ptr<Index> index_;
};

/// Sum of clipped road length inside the disk over segments passing the
/// filter. Candidates come from the index and are summed in ascending
/// segment order, so the result is bit-identical to a full scan.
double total_length_in_buffer(const RoadNetwork& network, PlanarPoint center, double radius, ClassFilter filter);

/// Nearest segment passing the filter; ties go to the lower segment index.
/// nullopt when no segment qualifies.
std::optional<NearestRoad> nearest_road(PlanarPoint center, const RoadNetwork& network, ClassFilter filter);

/// No segment satisfied the class filter.
class NoRoadError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Distance to the nearest qualifying segment. Throws NoRoadError.
double distance_to_nearest(PlanarPoint center, const RoadNetwork& network, ClassFilter filter);

/// North-up raster of cell values. `origin` is the lower-left corner of
/// the lower-left cell; row 0 is the northernmost row.
struct RasterGrid {
  PlanarPoint origin;
  double cell_size = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> values;  // row-major from the north-west corner
  double nodata = -9999.0;

  void validate() const;
  [[nodiscard]] bool is_nodata(double v) const { return v == nodata || !std::isfinite(v); }
  [[nodiscard]] double at(std::size_t row, std::size_t col) const { return values[row * n_cols + col]; }
  [[nodiscard]] PlanarPoint cell_center(std::size_t row, std::size_t col) const;
  [[nodiscard]] Box extent() const;
};

using ElevationGrid = RasterGrid;

struct ElevationSample {
  double value = 0.0;
  bool fallback = false;  // a corner was nodata; nearest valid cell used
};

/// Bilinear interpolation between the four surrounding cell centres.
/// Within half a cell of the border the nearest edge centres are used.
/// If any corner is nodata, returns the nearest valid cell's value.
/// Throws DomainError outside the grid extent or when no valid cell exists.
ElevationSample elevation_at(const ElevationGrid& grid, PlanarPoint p);

}  // namespace lur::geo
