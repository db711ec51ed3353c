#pragma once

#include <filesystem>

#include "json.hpp"
#include "lur/features.hpp"

namespace lur::features {

// feature_spec.json layout:
//
//   {
//     "buffers_m": [24, 50, 100, 200, 300, 500, 1000],
//     "features": ["Elevation", "Lat", "Long", "MAJORROADLENGTH", "ROADLENGTH",
//                  "DISTINVNEAR1", "TRUCK_AADT", "VEH_AADT"],
//     "expected_signs": { "NO2": { "MAJORROADLENGTH": "+", ... },
//                         "O3":  { "MAJORROADLENGTH": "-", ... } },
//     "major_road_classes": ["motorway", "trunk", "primary", "secondary"],
//     "buffer_corr": "abs",          // or "signed"
//     "min_distance_m": 1.0
//   }
//
// Every key is optional; missing keys take FeatureConfig::defaults().

nlohmann::json to_json(const FeatureConfig& cfg);
FeatureConfig feature_config_from_json(const nlohmann::json& j);
FeatureConfig load_feature_config(const std::filesystem::path& path);
void save_feature_config(const std::filesystem::path& path, const FeatureConfig& cfg);

nlohmann::json to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const nlohmann::json& j);

}  // namespace lur::features
