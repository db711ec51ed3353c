#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "lur/csv.hpp"
#include "lur/diagnostics.hpp"
#include "lur/feature_config.hpp"
#include "lur/fixture.hpp"
#include "lur/forest.hpp"
#include "lur/fusion.hpp"
#include "lur/geo_io.hpp"
#include "lur/mapping.hpp"
#include "lur/pipeline.hpp"
#include "lur/validation.hpp"

namespace lur::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Stream ids under the run seed.
constexpr std::uint64_t kForestStream = 100;
constexpr std::uint64_t kCvStream = 200;
constexpr std::uint64_t kImportanceStream = 300;

std::uint64_t pollutant_index(Pollutant p) { return p == Pollutant::NO2 ? 0 : 1; }
std::string pol(Pollutant p) { return std::string(to_string(p)); }

void log(std::string_view stage, const std::string& message) { fmt::print(stderr, "[{}] {}\n", stage, message); }

template <typename F>
void run_stage(const char* name, F&& body) {
  try {
    body();
  } catch (const ValidationError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

fs::path need(const RunConfig& cfg, const std::string& file, const char* producer) {
  const auto p = cfg.output_dir / file;
  if (!fs::exists(p)) throw PipelineError(fmt::format("missing {}; run `{}` first", p.string(), producer));
  return p;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PipelineError(fmt::format("cannot write '{}'", path.string()));
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw PipelineError(fmt::format("cannot read '{}'", path.string()));
  json j;
  in >> j;
  return j;
}

Dataset load(const RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  try {
    return ingest_and_validate(cfg);
  } catch (const ValidationError& e) {
    write_json(cfg.output_dir / "ingest_report.json", {{"status", "failed"}, {"error", e.what()}, {"report", e.report()}});
    throw;
  }
}

double number(const std::string& field, const fs::path& file, std::size_t line) {
  const auto v = csv::parse_optional_double(field);
  if (!v) throw DomainError(fmt::format("{}:{}: missing value", file.string(), line));
  return *v;
}

/// A CSV of per-site predictor columns.
struct SiteTable {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  Matrix values;
  std::vector<double> targets;  // mean_ppb when present
};

SiteTable read_site_table(const fs::path& path, const std::vector<std::string>& columns, bool with_target) {
  const auto t = csv::read(path);
  const auto c_id = t.require("site_id");
  std::vector<std::size_t> idx;
  for (const auto& c : columns) idx.push_back(t.require(c));
  const auto c_target = with_target ? std::optional(t.require("mean_ppb")) : std::nullopt;
  SiteTable out;
  out.columns = columns;
  out.values = Matrix(0, columns.size());
  std::vector<double> row(columns.size());
  for (const auto& r : t.rows) {
    out.ids.push_back(r.fields.at(c_id));
    for (std::size_t i = 0; i < idx.size(); ++i) row[i] = number(r.fields.at(idx[i]), path, r.line);
    out.values.append_row(row);
    if (c_target) out.targets.push_back(number(r.fields.at(*c_target), path, r.line));
  }
  return out;
}

json selection_to_json(const features::Selection& s, Pollutant p, const features::SiteMeans& means) {
  json j;
  j["pollutant"] = pol(p);
  j["approach"] = static_cast<int>(s.approach);
  j["infeasible"] = s.infeasible;
  j["n_sites"] = means.sites.size();
  j["features"] = features::to_json(s.spec);
  json corr = json::object();
  for (const auto& [name, r] : s.correlations) corr[name] = r ? json(*r) : json(nullptr);
  j["correlations"] = corr;
  if (s.buffers) {
    json fams = json::array();
    for (const auto& f : s.buffers->families) {
      json c = json::array();
      for (const auto& bc : f.correlations) c.push_back({{"buffer_m", bc.buffer_m}, {"r", bc.r ? json(*bc.r) : json(nullptr)}});
      fams.push_back({{"code", std::string(features::code_name(f.code))},
                      {"correlations", c},
                      {"chosen_buffer_m", f.chosen_buffer ? json(*f.chosen_buffer) : json(nullptr)}});
    }
    j["buffer_optimization"] = fams;
  }
  if (s.signs) j["removed_by_sign"] = s.signs->removed;
  return j;
}

struct SelectionFile {
  bool infeasible = false;
  features::FeatureSpec spec;
};

SelectionFile read_selection(const fs::path& path) {
  const auto j = read_json(path);
  SelectionFile s;
  s.infeasible = j.at("infeasible").get<bool>();
  if (!s.infeasible) s.spec = features::feature_spec_from_json(j.at("features"));
  return s;
}

/// static_predictions.csv -> pollutant -> site -> C̄
std::map<Pollutant, fusion::StaticPredictions> read_static(const fs::path& path) {
  const auto t = csv::read(path);
  const auto c_p = t.require("pollutant");
  const auto c_id = t.require("site_id");
  const auto c_v = t.require("static_ppb");
  std::map<Pollutant, fusion::StaticPredictions> out;
  for (const auto& r : t.rows)
    out[parse_pollutant(r.fields.at(c_p))][r.fields.at(c_id)] = number(r.fields.at(c_v), path, r.line);
  return out;
}

geo::Box map_bbox(const RunConfig& cfg, const Dataset& ds) {
  if (cfg.mapping.bbox_m) return *cfg.mapping.bbox_m;
  if (cfg.mapping.bbox_deg) {
    const auto& b = *cfg.mapping.bbox_deg;
    const auto sw = geo::project({b[1], b[0]}, ds.origin);
    const auto ne = geo::project({b[3], b[2]}, ds.origin);
    return {sw, ne};
  }
  geo::Box box{{INFINITY, INFINITY}, {-INFINITY, -INFINITY}};
  for (const auto& s : ds.sites) {
    const auto p = geo::project(s.location, ds.origin);
    box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y)};
    box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y)};
  }
  const double pad = 0.5 * cfg.mapping.resolution_m;
  box.min = {box.min.x - pad, box.min.y - pad};
  box.max = {box.max.x + pad, box.max.y + pad};
  return box;
}

}  // namespace

void stage_ingest(const RunConfig& cfg) {
  run_stage("ingest", [&] {
    const auto ds = load(cfg);
    write_json(cfg.output_dir / "ingest_report.json", {{"status", "ok"}, {"report", to_json(ds.report)},
                                                         {"origin", {{"lat", ds.origin.lat}, {"lon", ds.origin.lon}}},
                                                         {"records_in_window", ds.records.size()}});
    csv::Writer out(cfg.output_dir / "site_locations.csv");
    out.row({"site_id", "lat", "lon", "x_m", "y_m"});
    for (const auto& s : ds.sites) {
      const auto p = geo::project(s.location, ds.origin);
      out.row({s.id, csv::format_number(s.location.lat), csv::format_number(s.location.lon), csv::format_number(p.x),
               csv::format_number(p.y)});
    }
    log("ingest", fmt::format("{} sites, {} observation rows in window, {} rows rejected, {} road segments",
                              ds.sites.size(), ds.records.size(), ds.report.rejected.size(), ds.report.road_segments));
  });
}

void stage_features(const RunConfig& cfg) {
  run_stage("features", [&] {
    const auto ds = load(cfg);
    const auto full = cfg.feature_config.full_spec();
    std::vector<std::pair<std::string, features::Location>> points;
    for (const auto& s : ds.sites) points.emplace_back(s.id, features::Location::from_geo(s.location, ds.origin));
    const auto table = features::extract_table(points, ds.land_use, full, cfg.feature_config.min_distance_m);

    {
      csv::Writer out(cfg.output_dir / "predictors_all.csv");
      auto header = std::vector<std::string>{"site_id"};
      header.insert(header.end(), table.columns.begin(), table.columns.end());
      header.insert(header.end(), {"flag_no_major_road", "flag_elevation_fallback", "flag_edge_effect"});
      out.row(header);
      for (std::size_t r = 0; r < table.ids.size(); ++r) {
        std::vector<std::string> row{table.ids[r]};
        for (double v : table.values.row(r)) row.push_back(csv::format_number(v));
        const auto& f = table.flags[r];
        row.insert(row.end(), {f.no_major_road ? "1" : "0", f.elevation_fallback ? "1" : "0", f.edge_effect ? "1" : "0"});
        out.row(row);
      }
    }

    csv::Writer means_out(cfg.output_dir / "site_means.csv");
    means_out.row({"pollutant", "site_id", "mean_ppb", "n_hours", "completeness", "included"});
    std::size_t feasible = 0;
    const auto ids = ds.site_ids();
    for (auto p : cfg.pollutants) {
      const auto means = features::mean_concentrations(ds.records, cfg.window, p, cfg.completeness_min, ids);
      for (const auto& m : means.sites)
        means_out.row({pol(p), m.site_id, csv::format_number(m.mean_ppb), std::to_string(m.n_hours),
                       csv::format_number(m.completeness), "1"});
      for (const auto& m : means.excluded)
        means_out.row({pol(p), m.site_id, "", std::to_string(m.n_hours), csv::format_number(m.completeness), "0"});

      const auto sub = table.select_rows(means.ids());
      const auto targets = means.values();
      const auto sel = features::select_predictors(sub, targets, cfg.feature_config, p, cfg.approach);
      write_json(cfg.output_dir / fmt::format("selection_{}.json", pol(p)), selection_to_json(sel, p, means));

      const auto pred_path = cfg.output_dir / fmt::format("predictors_{}.csv", pol(p));
      if (sel.infeasible) {
        fs::remove(pred_path);
        log("features", fmt::format("approach {} infeasible for {}: every predictor contradicts its expected sign",
                                    static_cast<int>(cfg.approach), pol(p)));
        continue;
      }
      ++feasible;
      const auto names = sel.spec.names();
      const auto chosen = sub.select_columns(names);
      csv::Writer out(pred_path);
      auto header = std::vector<std::string>{"site_id", "mean_ppb"};
      header.insert(header.end(), names.begin(), names.end());
      out.row(header);
      for (std::size_t r = 0; r < chosen.ids.size(); ++r) {
        std::vector<std::string> row{chosen.ids[r], csv::format_number(targets[r])};
        for (double v : chosen.values.row(r)) row.push_back(csv::format_number(v));
        out.row(row);
      }
      log("features", fmt::format("{}: {} sites, {} of {} predictors (approach {})", pol(p), means.sites.size(),
                                  names.size(), full.entries.size(), static_cast<int>(cfg.approach)));
    }
    if (feasible == 0) throw PipelineError("no pollutant has a feasible predictor set");
  });
}

void stage_train(const RunConfig& cfg) {
  run_stage("train", [&] {
    const auto all_path = need(cfg, "predictors_all.csv", "features");
    csv::Writer summary(cfg.output_dir / "cv_summary.csv");
    summary.row({"pollutant", "approach", "status", "n_sites", "n_features", "chosen_mtry", "cv_rmse_ppb", "cv_r2",
                 "cv_pooled_r2", "apparent_rmse_ppb", "apparent_r2", "apparent_r2_traditional"});
    csv::Writer statics(cfg.output_dir / "static_predictions.csv");
    statics.row({"pollutant", "site_id", "static_ppb", "observed_mean_ppb", "in_training"});

    for (auto p : cfg.pollutants) {
      const auto sel = read_selection(need(cfg, fmt::format("selection_{}.json", pol(p)), "features"));
      if (sel.infeasible) {
        summary.row({pol(p), std::to_string(static_cast<int>(cfg.approach)), "infeasible", "", "", "", "", "", "", "",
                     "", ""});
        log("train", fmt::format("{}: skipped, predictor selection infeasible", pol(p)));
        continue;
      }
      const auto names = sel.spec.names();
      const auto train = read_site_table(need(cfg, fmt::format("predictors_{}.csv", pol(p)), "features"), names, true);
      if (cfg.forest.k > train.ids.size())
        throw DomainError(fmt::format("{}: k = {} exceeds the {} training sites", pol(p), cfg.forest.k, train.ids.size()));

      forest::ForestParams params;
      params.n_trees = cfg.forest.n_trees;
      params.min_node_size = cfg.forest.min_node_size;
      params.mtry = 1;
      params.seed = derive_seed(cfg.seed, kForestStream + pollutant_index(p));
      const auto grid = cfg.forest.mtry_grid.empty() ? forest::default_mtry_grid(names.size()) : cfg.forest.mtry_grid;
      const auto cv = forest::cross_validate(train.values, train.targets, grid, cfg.forest.k, params,
                                             derive_seed(cfg.seed, kCvStream + pollutant_index(p)), names,
                                             cfg.forest.threads);
      for (const auto& w : cv.warnings) log("train", fmt::format("{}: {}", pol(p), w));
      const auto imp = forest::variable_importance(cv.final_model, train.values, train.targets,
                                                   cfg.forest.importance_repeats,
                                                   derive_seed(cfg.seed, kImportanceStream + pollutant_index(p)));
      forest::write_cv_csv(cfg.output_dir / fmt::format("cv_{}.csv", pol(p)), cv);
      forest::write_importance_csv(cfg.output_dir / fmt::format("importance_{}.csv", pol(p)), imp);
      forest::save_forest(cfg.output_dir / fmt::format("forest_{}.json", pol(p)), cv.final_model);

      const auto& best = cv.chosen();
      summary.row({pol(p), std::to_string(static_cast<int>(cfg.approach)), "ok", std::to_string(train.ids.size()),
                   std::to_string(names.size()), std::to_string(cv.chosen_mtry), csv::format_number(best.mean_rmse),
                   csv::format_optional(best.mean_r2), csv::format_optional(best.pooled_r2),
                   csv::format_number(cv.apparent_rmse), csv::format_optional(cv.apparent_r2),
                   csv::format_optional(cv.apparent_r2_traditional)});

      std::map<std::string, double> observed;
      for (std::size_t i = 0; i < train.ids.size(); ++i) observed[train.ids[i]] = train.targets[i];
      const auto all = read_site_table(all_path, names, false);
      for (std::size_t r = 0; r < all.ids.size(); ++r) {
        const auto it = observed.find(all.ids[r]);
        statics.row({pol(p), all.ids[r], csv::format_number(cv.final_model.predict(all.values.row(r))),
                     it == observed.end() ? "" : csv::format_number(it->second), it == observed.end() ? "0" : "1"});
      }
      log("train", fmt::format("{}: mtry {} chosen; CV RMSE {:.3f} ppb, CV R² {:.3f}; apparent R² {:.3f}", pol(p),
                               cv.chosen_mtry, best.mean_rmse, best.mean_r2.value_or(NAN),
                               cv.apparent_r2.value_or(NAN)));
    }
  });
}

void stage_fuse(const RunConfig& cfg) {
  run_stage("fuse", [&] {
    const auto ds = load(cfg);
    const auto statics = read_static(need(cfg, "static_predictions.csv", "train"));
    fusion::FusionOptions options{cfg.fusion.min_sites, cfg.fusion.with_intercept};
    std::vector<fusion::FusionSeries> all;
    csv::Writer diurnal(cfg.output_dir / "diurnal.csv");
    diurnal.row({"pollutant", "local_hour", "mean_ppb", "mean_a_hat"});
    for (auto p : cfg.pollutants) {
      const auto it = statics.find(p);
      if (it == statics.end()) continue;
      auto series = fusion::fuse_series(it->second, ds.records, cfg.window, p, options);

      const auto observed = fusion::diurnal_means(ds.records, cfg.window, p, cfg.utc_offset_hours);
      std::array<double, 24> a_sum{};
      std::array<std::size_t, 24> a_n{};
      for (const auto& h : series.hours) {
        const auto lh = static_cast<std::size_t>(local_hour_of_day(h.hour, cfg.utc_offset_hours));
        a_sum[lh] += h.a_hat;
        ++a_n[lh];
      }
      for (std::size_t h = 0; h < 24; ++h)
        diurnal.row({pol(p), std::to_string(h), csv::format_optional(observed[h]),
                     a_n[h] ? csv::format_number(a_sum[h] / static_cast<double>(a_n[h])) : ""});

      const auto negatives = std::ranges::count_if(series.hours, &fusion::HourFit::negative_scale);
      log("fuse", fmt::format("{}: {} hours fitted, {} skipped ({:.1f}%), {} with negative scale", pol(p),
                              series.hours.size(), series.skipped.size(), 100.0 * series.skip_fraction(), negatives));
      all.push_back(std::move(series));
    }
    if (all.empty()) throw PipelineError("no static predictions to fuse");
    fusion::write_fusion_csv(cfg.output_dir / "fusion.csv", all);
    fusion::write_residuals_csv(cfg.output_dir / "residuals.csv", all);
    fusion::write_skips_csv(cfg.output_dir / "fusion_skips.csv", all);
  });
}

void stage_diagnose(const RunConfig& cfg) {
  run_stage("diagnose", [&] {
    const auto ds = load(cfg);
    const auto series = fusion::read_series_csv(need(cfg, "fusion.csv", "fuse"), need(cfg, "residuals.csv", "fuse"),
                                                cfg.output_dir / "fusion_skips.csv");
    if (cfg.diagnostics.wind_reference_site) (void)ds.site(*cfg.diagnostics.wind_reference_site);
    const diagnostics::WindTable wind(ds.records, cfg.diagnostics.wind_reference_site);
    diagnostics::PolarOptions polar{cfg.diagnostics.sectors, cfg.diagnostics.speed_edges};
    polar.validate();
    const auto ids = ds.site_ids();

    std::vector<diagnostics::SiteVarianceReport> variance;
    std::vector<diagnostics::PolarBinTable> bins;
    std::map<Pollutant, std::vector<diagnostics::SiteSeries>> extracts;
    for (const auto& s : series) {
      variance.push_back(diagnostics::site_variance_fractions(s, ids));
      bins.push_back(diagnostics::polar_bin_means(s, wind, polar));
      for (const auto& id : ids) {
        const std::string one[] = {id};
        bins.push_back(diagnostics::polar_bin_means(s, wind, polar, one, id));
      }
      auto chosen = cfg.diagnostics.timeseries_sites;
      if (chosen.empty()) {
        const auto ranking = variance.back().ranking();
        chosen.assign(ranking.begin(), ranking.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(3, ranking.size())));
      }
      extracts[s.pollutant] = diagnostics::residual_timeseries(s, chosen, cfg.window, ids);
      const auto ranking = variance.back().ranking();
      log("diagnose", fmt::format("{}: largest unexplained-variance shares at {}", pol(s.pollutant),
                                  fmt::join(ranking.begin(), ranking.begin() + std::min<std::ptrdiff_t>(3, ranking.size()), ", ")));
    }
    diagnostics::write_site_variance_csv(cfg.output_dir / "site_variance.csv", variance);
    diagnostics::write_polar_csv(cfg.output_dir / "polar_bins.csv", bins);
    diagnostics::write_timeseries_csv(cfg.output_dir / "timeseries.csv", extracts);

    const auto box = diagnostics::summary_stats(ds.records, cfg.window);
    diagnostics::write_boxstats_csv(cfg.output_dir / "boxstats.csv", box);
    csv::Writer map_out(cfg.output_dir / "site_means_map.csv");
    map_out.row({"pollutant", "site_id", "lat", "lon", "mean_ppb", "n_hours"});
    for (const auto& b : box) {
      const auto& site = ds.site(b.site_id);
      map_out.row({pol(b.pollutant), b.site_id, csv::format_number(site.location.lat),
                   csv::format_number(site.location.lon), csv::format_number(b.mean), std::to_string(b.n)});
    }
  });
}

void stage_map(const RunConfig& cfg) {
  run_stage("map", [&] {
    const auto ds = load(cfg);
    const auto bbox = map_bbox(cfg, ds);
    std::optional<geo::PlanarPoint> anchor;
    if (cfg.mapping.anchor_site) anchor = geo::project(ds.site(*cfg.mapping.anchor_site).location, ds.origin);

    std::vector<fusion::FusionSeries> series;
    if (!cfg.mapping.hours.empty())
      series = fusion::read_series_csv(need(cfg, "fusion.csv", "fuse"), need(cfg, "residuals.csv", "fuse"),
                                       cfg.output_dir / "fusion_skips.csv");
    const auto statics = read_static(need(cfg, "static_predictions.csv", "train"));

    csv::Writer overlay(cfg.output_dir / "sites_overlay.csv");
    overlay.row({"pollutant", "timestamp_utc", "site_id", "lat", "lon", "x_m", "y_m", "observed_ppb", "modeled_ppb"});

    std::size_t mapped = 0;
    for (auto p : cfg.pollutants) {
      const auto forest_path = cfg.output_dir / fmt::format("forest_{}.json", pol(p));
      if (!fs::exists(forest_path)) continue;
      const auto model = forest::load_forest(forest_path);
      const auto sel = read_selection(need(cfg, fmt::format("selection_{}.json", pol(p)), "features"));
      if (sel.infeasible) continue;

      auto grid = mapping::make_grid(bbox, cfg.mapping.resolution_m, ds.origin, anchor);
      mapping::predict_static_grid(grid, model, ds.land_use, sel.spec, cfg.feature_config.min_distance_m,
                                   cfg.forest.threads);
      geo::write_esri_ascii(cfg.output_dir / fmt::format("static_{}.asc", pol(p)), mapping::to_raster(grid, false));
      mapping::write_grid_csv(cfg.output_dir / fmt::format("grid_{}.csv", pol(p)), grid);
      const auto failed = std::ranges::count_if(grid.cells, [](const auto& c) { return !c.static_pred; });
      const auto edge = std::ranges::count_if(grid.cells, &mapping::Cell::edge_effect);
      log("map", fmt::format("{}: {}x{} cells at {} m, {} nodata, {} edge-effect", pol(p), grid.n_cols, grid.n_rows,
                             cfg.mapping.resolution_m, failed, edge));

      const auto& site_static = statics.at(p);
      for (const auto& s : ds.sites) {
        const auto xy = geo::project(s.location, ds.origin);
        const auto it = site_static.find(s.id);
        overlay.row({pol(p), "", s.id, csv::format_number(s.location.lat), csv::format_number(s.location.lon),
                     csv::format_number(xy.x), csv::format_number(xy.y), "",
                     it == site_static.end() ? "" : csv::format_number(it->second)});
      }

      const auto ser = std::ranges::find(series, p, &fusion::FusionSeries::pollutant);
      for (const auto hour : cfg.mapping.hours) {
        if (ser == series.end()) throw DomainError(fmt::format("no fusion series for {}", pol(p)));
        const auto hourly = mapping::predict_hourly_grid(grid, *ser, hour);
        const auto stamp = format_hour_compact(hour);
        geo::write_esri_ascii(cfg.output_dir / fmt::format("{}_{}.asc", pol(p), stamp), mapping::to_raster(hourly, true));
        mapping::write_grid_csv(cfg.output_dir / fmt::format("grid_{}_{}.csv", pol(p), stamp), hourly);
        const auto* fit = ser->find(hour);
        for (const auto& e : fit->residuals) {
          const auto& s = ds.site(e.site_id);
          const auto xy = geo::project(s.location, ds.origin);
          overlay.row({pol(p), format_hour(hour), e.site_id, csv::format_number(s.location.lat),
                       csv::format_number(s.location.lon), csv::format_number(xy.x), csv::format_number(xy.y),
                       csv::format_number(e.observed), csv::format_number(e.modeled)});
        }
      }
      ++mapped;
    }
    if (mapped == 0) throw PipelineError("no trained model to map");
  });
}

void run_pipeline(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  // Clear the files of a previous run in the same directory so the
  // inventory lists only this run's outputs.
  const auto previous = cfg.output_dir / "manifest.json";
  if (fs::exists(previous)) {
    const auto old = read_json(previous);
    if (old.contains("outputs"))
      for (const auto& [name, meta] : old["outputs"].items()) fs::remove(cfg.output_dir / name);
    fs::remove(previous);
  }
  stage_ingest(cfg);
  stage_features(cfg);
  stage_train(cfg);
  stage_fuse(cfg);
  stage_diagnose(cfg);
  stage_map(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run_stage("manifest", [&] { write_manifest(cfg, seconds); });
  log("run", fmt::format("done in {:.1f} s; outputs in {}", seconds, cfg.output_dir.string()));
}

}  // namespace lur::pipeline
