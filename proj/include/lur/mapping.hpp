#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lur/features.hpp"
#include "lur/forest.hpp"
#include "lur/fusion.hpp"
#include "lur/geo.hpp"

namespace lur::mapping {

struct Cell {
  std::size_t row = 0;  // 0 is the northern row
  std::size_t col = 0;
  features::Location where;
  std::optional<double> static_pred;
  std::optional<double> hourly_pred;
  bool edge_effect = false;
  std::string error;  // extraction failure; the cell is nodata
};

struct PredictionGrid {
  geo::Box bbox;
  double resolution = 0.0;
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  geo::GeoPoint origin;
  std::vector<Cell> cells;  // row-major from the north-west cell

  [[nodiscard]] const Cell& cell(std::size_t row, std::size_t col) const { return cells[row * n_cols + col]; }
  /// Cell whose centre is nearest to `p`.
  [[nodiscard]] const Cell& nearest_cell(geo::PlanarPoint p) const;
  /// Index of the largest static prediction (first on ties), or nullopt.
  [[nodiscard]] std::optional<std::size_t> argmax_static() const;
  [[nodiscard]] std::optional<std::size_t> argmax_hourly() const;
};

/// ceil(Δx/res) x ceil(Δy/res) cells centred on the bbox centre. With an
/// anchor the lattice is shifted by less than half a cell so that one
/// centre equals the anchor exactly. Throws DomainError for a degenerate
/// bbox or non-positive resolution.
PredictionGrid make_grid(const geo::Box& bbox, double resolution, geo::GeoPoint origin,
                         std::optional<geo::PlanarPoint> anchor = std::nullopt);

/// Extracts `spec` at every cell centre and applies the forest. Cells that
/// fail extraction keep no prediction and record the error.
void predict_static_grid(PredictionGrid& grid, const forest::Forest& model, const features::LandUse& land_use,
                         const features::FeatureSpec& spec, double min_distance_m = 1.0, unsigned n_threads = 0);

/// hourly = a_hat(hour) * static (+ intercept in intercept mode). Throws
/// DomainError naming the skip reason when the hour was not fitted.
PredictionGrid predict_hourly_grid(const PredictionGrid& grid, const fusion::FusionSeries& series, HourStamp hour);

/// North-up raster of the static or hourly layer; missing cells are nodata.
geo::RasterGrid to_raster(const PredictionGrid& grid, bool hourly);

// cell_id,row,col,lat,lon,x_m,y_m,static_ppb,hourly_ppb,edge_effect,error
void write_grid_csv(const std::filesystem::path& path, const PredictionGrid& grid);

}  // namespace lur::mapping
