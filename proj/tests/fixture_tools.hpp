// Helpers shared by the pipeline tests and the acceptance binary.
#pragma once

#include "lur/feature_config.hpp"
#include "lur/pipeline.hpp"

namespace fixture_tools {

/// Expected signs for `pollutant` set opposite to the correlation each
/// family shows at its optimised buffer, so the sign filter removes all.
inline lur::features::FeatureConfig contradicting_signs(const lur::pipeline::RunConfig& cfg,
                                                        const lur::pipeline::Dataset& ds, lur::Pollutant pollutant) {
  using namespace lur::features;
  std::vector<std::pair<std::string, Location>> points;
  for (const auto& s : ds.sites) points.emplace_back(s.id, Location::from_geo(s.location, ds.origin));
  const auto full = cfg.feature_config.full_spec();
  const auto table = extract_table(points, ds.land_use, full, cfg.feature_config.min_distance_m);
  const auto means = mean_concentrations(ds.records, cfg.window, pollutant, cfg.completeness_min, ds.site_ids());
  const auto sub = table.select_rows(means.ids());
  const auto targets = means.values();
  const auto chosen = optimize_buffers(sub, targets, full, cfg.feature_config.buffer_corr);
  const auto corr = correlate(sub, targets, chosen.spec);
  auto out = cfg.feature_config;
  for (const auto& e : chosen.spec.entries) {
    const auto r = corr.at(e.name());
    if (r) out.expected_signs[pollutant][e.code] = *r > 0.0 ? Sign::Negative : Sign::Positive;
  }
  return out;
}

}  // namespace fixture_tools
