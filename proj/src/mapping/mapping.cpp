#include "lur/mapping.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "lur/csv.hpp"

namespace lur::mapping {

namespace {

std::size_t cells_along(double extent, double resolution) {
  // Guard against 10000/500 evaluating to 20.000000000000004.
  const double q = extent / resolution;
  const double r = std::round(q);
  const double n = std::abs(q - r) < 1e-9 ? r : std::ceil(q);
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

std::optional<std::size_t> argmax(const PredictionGrid& grid, std::optional<double> Cell::*layer) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const auto& v = grid.cells[i].*layer;
    if (v && (!best || *v > *(grid.cells[*best].*layer))) best = i;
  }
  return best;
}

}  // namespace

const Cell& PredictionGrid::nearest_cell(geo::PlanarPoint p) const {
  if (cells.empty()) throw DomainError("empty grid");
  const auto it = std::ranges::min_element(
      cells, {}, [&](const Cell& c) { return geo::distance(c.where.planar, p); });
  return *it;
}

std::optional<std::size_t> PredictionGrid::argmax_static() const { return argmax(*this, &Cell::static_pred); }
std::optional<std::size_t> PredictionGrid::argmax_hourly() const { return argmax(*this, &Cell::hourly_pred); }

PredictionGrid make_grid(const geo::Box& bbox, double resolution, geo::GeoPoint origin,
                         std::optional<geo::PlanarPoint> anchor) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) throw DomainError("grid resolution must be > 0");
  const double dx = bbox.max.x - bbox.min.x;
  const double dy = bbox.max.y - bbox.min.y;
  if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy))
    throw DomainError("degenerate grid bounding box");

  PredictionGrid grid;
  grid.bbox = bbox;
  grid.resolution = resolution;
  grid.origin = origin;
  grid.n_cols = cells_along(dx, resolution);
  grid.n_rows = cells_along(dy, resolution);

  const double cx = 0.5 * (bbox.min.x + bbox.max.x);
  const double cy = 0.5 * (bbox.min.y + bbox.max.y);
  const double half_c = 0.5 * static_cast<double>(grid.n_cols - 1);
  const double half_r = 0.5 * static_cast<double>(grid.n_rows - 1);
  // Centre of column c is base_x + (c - pivot_c) * resolution; likewise
  // for rows, counting southwards.
  double base_x = cx;
  double base_y = cy;
  double pivot_c = half_c;
  double pivot_r = half_r;
  if (anchor) {
    const auto nearest_index = [](double v, std::size_t n) {
      return std::clamp(std::round(v), 0.0, static_cast<double>(n - 1));
    };
    pivot_c = nearest_index((anchor->x - cx) / resolution + half_c, grid.n_cols);
    pivot_r = nearest_index((cy - anchor->y) / resolution + half_r, grid.n_rows);
    base_x = anchor->x;
    base_y = anchor->y;
  }
  auto x_of = [&](std::size_t c) { return base_x + (static_cast<double>(c) - pivot_c) * resolution; };
  auto y_of = [&](std::size_t r) { return base_y - (static_cast<double>(r) - pivot_r) * resolution; };

  grid.cells.reserve(grid.n_rows * grid.n_cols);
  for (std::size_t r = 0; r < grid.n_rows; ++r)
    for (std::size_t c = 0; c < grid.n_cols; ++c) {
      Cell cell;
      cell.row = r;
      cell.col = c;
      cell.where = features::Location::from_planar({x_of(c), y_of(r)}, origin);
      grid.cells.push_back(std::move(cell));
    }
  return grid;
}

void predict_static_grid(PredictionGrid& grid, const forest::Forest& model, const features::LandUse& land_use,
                         const features::FeatureSpec& spec, double min_distance_m, unsigned n_threads) {
  model.check_feature_names(spec.names());
  auto work = [&](Cell& cell) {
    try {
      const auto v = features::extract_predictors(cell.where, land_use, spec, min_distance_m);
      cell.static_pred = model.predict(v.values);
      cell.edge_effect = v.flags.edge_effect;
      cell.error.clear();
    } catch (const DomainError& e) {
      cell.static_pred.reset();
      cell.error = e.what();
    }
  };

  unsigned threads = n_threads ? n_threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, grid.cells.size()));
  if (threads <= 1) {
    for (auto& cell : grid.cells) work(cell);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < grid.cells.size(); i = next++) work(grid.cells[i]);
    });
}

PredictionGrid predict_hourly_grid(const PredictionGrid& grid, const fusion::FusionSeries& series, HourStamp hour) {
  const auto* fit = series.find(hour);
  if (!fit) {
    if (const auto* skip = series.find_skip(hour))
      throw DomainError(fmt::format("hour {} was skipped in fusion ({}, {} sites)", format_hour(hour),
                                    fusion::to_string(skip->reason), skip->n_sites));
    throw DomainError(fmt::format("hour {} is not in the fusion series", format_hour(hour)));
  }
  PredictionGrid out = grid;
  const double b = fit->intercept.value_or(0.0);
  for (auto& cell : out.cells) {
    if (cell.static_pred)
      cell.hourly_pred = fit->intercept ? b + fit->a_hat * *cell.static_pred : fit->a_hat * *cell.static_pred;
    else
      cell.hourly_pred.reset();
  }
  return out;
}

geo::RasterGrid to_raster(const PredictionGrid& grid, bool hourly) {
  geo::RasterGrid r;
  r.cell_size = grid.resolution;
  r.n_rows = grid.n_rows;
  r.n_cols = grid.n_cols;
  const auto& sw = grid.cell(grid.n_rows - 1, 0).where.planar;
  r.origin = {sw.x - 0.5 * grid.resolution, sw.y - 0.5 * grid.resolution};
  r.values.reserve(grid.cells.size());
  for (const auto& cell : grid.cells) {
    const auto& v = hourly ? cell.hourly_pred : cell.static_pred;
    r.values.push_back(v ? *v : r.nodata);
  }
  return r;
}

void write_grid_csv(const std::filesystem::path& path, const PredictionGrid& grid) {
  csv::Writer out(path);
  out.row({"cell_id", "row", "col", "lat", "lon", "x_m", "y_m", "static_ppb", "hourly_ppb", "edge_effect", "error"});
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const auto& c = grid.cells[i];
    out.row({std::to_string(i), std::to_string(c.row), std::to_string(c.col), csv::format_number(c.where.geo.lat),
             csv::format_number(c.where.geo.lon), csv::format_number(c.where.planar.x),
             csv::format_number(c.where.planar.y), csv::format_optional(c.static_pred),
             csv::format_optional(c.hourly_pred), c.edge_effect ? "1" : "0", c.error});
  }
}

}  // namespace lur::mapping
