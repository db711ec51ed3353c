// Command-line front end. Every subcommand except `fixture` reads a run
// config; flags override the matching config keys for that invocation.
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "lur/fixture.hpp"
#include "lur/pipeline.hpp"

namespace pl = lur::pipeline;

namespace {

struct Overrides {
  std::string config;
  std::optional<int> approach;
  std::vector<std::size_t> mtry_grid;
  std::optional<std::size_t> k;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> min_sites;
  bool with_intercept = false;
  std::optional<std::size_t> sectors;
  std::optional<double> resolution;
  std::vector<std::string> hours;
  std::optional<std::string> output_dir;
};

pl::RunConfig resolve(const Overrides& o) {
  auto cfg = pl::load_config(o.config);
  try {
    if (o.approach) cfg.approach = lur::features::parse_approach(*o.approach);
    if (!o.mtry_grid.empty()) cfg.forest.mtry_grid = o.mtry_grid;
    if (o.k) cfg.forest.k = *o.k;
    if (o.seed) cfg.seed = *o.seed;
    if (o.min_sites) cfg.fusion.min_sites = *o.min_sites;
    if (o.with_intercept) cfg.fusion.with_intercept = true;
    if (o.sectors) cfg.diagnostics.sectors = *o.sectors;
    if (o.resolution) cfg.mapping.resolution_m = *o.resolution;
    if (!o.hours.empty()) {
      cfg.mapping.hours.clear();
      for (const auto& h : o.hours) cfg.mapping.hours.push_back(lur::parse_hour(h));
    }
    if (o.output_dir) cfg.output_dir = *o.output_dir;
  } catch (const lur::DomainError& e) {
    throw pl::ValidationError(e.what());
  }
  if (cfg.forest.k < 2) throw pl::ValidationError("--k must be at least 2");
  if (!(cfg.mapping.resolution_m > 0.0)) throw pl::ValidationError("--resolution must be positive");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Land-use regression with random forests and hourly sensor fusion"};
  app.set_version_flag("--version", std::string(pl::kVersion));
  app.require_subcommand(1);

  Overrides o;
  pl::FixtureOptions fx;
  std::string fixture_out = "fixture";

  auto* fixture = app.add_subcommand("fixture", "write the synthetic 31-site fixture and a ready-to-run config");
  fixture->add_option("--seed", fx.seed, "generator seed")->capture_default_str();
  fixture->add_option("--out", fixture_out, "output directory")->capture_default_str();

  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "run config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.output_dir, "override output_dir");
    return sub;
  };
  auto* run = with_config(app.add_subcommand("run", "run every stage and write the manifest"));
  run->add_option("--seed", o.seed, "override the run seed");
  auto* ingest = with_config(app.add_subcommand("ingest", "validate inputs and write the ingest report"));
  auto* features = with_config(app.add_subcommand("features", "extract predictors and select a predictor set"));
  features->add_option("--approach", o.approach, "1 all, 2 optimized buffers, 3 sign-filtered")
      ->check(CLI::IsMember({1, 2, 3}));
  auto* train = with_config(app.add_subcommand("train", "cross-validate mtry, fit forests, rank importance"));
  train->add_option("--mtry-grid", o.mtry_grid, "candidate mtry values")->delimiter(',');
  train->add_option("--k", o.k, "number of CV folds");
  train->add_option("--seed", o.seed, "override the run seed");
  auto* fuse = with_config(app.add_subcommand("fuse", "fit the hourly scale factor against sensor data"));
  fuse->add_option("--min-sites", o.min_sites, "fewest sites for an hourly fit");
  fuse->add_flag("--with-intercept", o.with_intercept, "fit an intercept as well");
  auto* diagnose = with_config(app.add_subcommand("diagnose", "residual variance shares and wind polar bins"));
  diagnose->add_option("--sectors", o.sectors, "wind direction sectors");
  auto* map = with_config(app.add_subcommand("map", "predict static and hourly grids"));
  map->add_option("--resolution", o.resolution, "cell size in metres");
  map->add_option("--hour", o.hours, "UTC hour to map, e.g. 2018-05-10T14:00:00Z (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pl::kExitValidation;
  }

  try {
    if (fixture->parsed()) {
      const auto fix = pl::generate_fixture(fx);
      pl::write_fixture(fix, fixture_out);
      fmt::print("fixture written to {}\n", fixture_out);
      return pl::kExitOk;
    }
    const auto cfg = resolve(o);
    if (run->parsed()) pl::run_pipeline(cfg);
    else if (ingest->parsed()) pl::stage_ingest(cfg);
    else if (features->parsed()) pl::stage_features(cfg);
    else if (train->parsed()) pl::stage_train(cfg);
    else if (fuse->parsed()) pl::stage_fuse(cfg);
    else if (diagnose->parsed()) pl::stage_diagnose(cfg);
    else if (map->parsed()) pl::stage_map(cfg);
    return pl::kExitOk;
  } catch (const pl::ValidationError& e) {
    std::cerr << "validation failed: " << e.what() << '\n';
    if (!e.report().is_null()) std::cerr << e.report().dump(2) << '\n';
    return pl::kExitValidation;
  } catch (const pl::StageError& e) {
    std::cerr << "stage failed: " << e.what() << '\n';
    return pl::kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pl::kExitStage;
  }
}
