#include "lur/feature_config.hpp"

#include <fstream>

#include <fmt/format.h>

namespace lur::features {

using nlohmann::json;

json to_json(const FeatureConfig& cfg) {
  json j;
  j["buffers_m"] = cfg.buffers;
  j["features"] = json::array();
  for (auto c : cfg.codes) j["features"].push_back(std::string(code_name(c)));
  j["expected_signs"] = json::object();
  for (const auto& [p, table] : cfg.expected_signs) {
    json t = json::object();
    for (const auto& [code, sign] : table) t[std::string(code_name(code))] = std::string(sign_name(sign));
    j["expected_signs"][std::string(to_string(p))] = t;
  }
  j["major_road_classes"] = cfg.road_classes.major;
  j["buffer_corr"] = cfg.buffer_corr == CorrelationMode::Absolute ? "abs" : "signed";
  j["min_distance_m"] = cfg.min_distance_m;
  return j;
}

FeatureConfig feature_config_from_json(const json& j) {
  FeatureConfig cfg = FeatureConfig::defaults();
  if (!j.is_object()) throw DomainError("feature config must be a JSON object");
  try {
    if (j.contains("buffers_m")) {
      cfg.buffers = j.at("buffers_m").get<std::vector<int>>();
      if (cfg.buffers.empty()) throw DomainError("buffers_m must not be empty");
      for (int b : cfg.buffers)
        if (b <= 0) throw DomainError("buffers_m entries must be positive");
    }
    if (j.contains("features")) {
      cfg.codes.clear();
      for (const auto& name : j.at("features")) cfg.codes.push_back(parse_code(name.get<std::string>()));
    }
    if (j.contains("expected_signs")) {
      cfg.expected_signs.clear();
      for (const auto& [pol, table] : j.at("expected_signs").items()) {
        auto& dst = cfg.expected_signs[parse_pollutant(pol)];
        for (const auto& [code, sign] : table.items()) dst[parse_code(code)] = parse_sign(sign.get<std::string>());
      }
    }
    if (j.contains("major_road_classes")) {
      cfg.road_classes.major.clear();
      for (const auto& c : j.at("major_road_classes")) cfg.road_classes.major.insert(c.get<std::string>());
    }
    if (j.contains("buffer_corr")) {
      const auto mode = j.at("buffer_corr").get<std::string>();
      if (mode == "abs")
        cfg.buffer_corr = CorrelationMode::Absolute;
      else if (mode == "signed")
        cfg.buffer_corr = CorrelationMode::Signed;
      else
        throw DomainError(fmt::format("buffer_corr must be 'abs' or 'signed' (got '{}')", mode));
    }
    if (j.contains("min_distance_m")) {
      cfg.min_distance_m = j.at("min_distance_m").get<double>();
      if (!(cfg.min_distance_m > 0.0)) throw DomainError("min_distance_m must be > 0");
    }
  } catch (const json::exception& e) {
    throw DomainError(fmt::format("feature config: {}", e.what()));
  }
  return cfg;
}

FeatureConfig load_feature_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError(fmt::format("cannot open feature config '{}'", path.string()));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DomainError(fmt::format("feature config '{}': {}", path.string(), e.what()));
  }
  return feature_config_from_json(j);
}

void save_feature_config(const std::filesystem::path& path, const FeatureConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PipelineError(fmt::format("cannot write '{}'", path.string()));
  out << to_json(cfg).dump(2) << '\n';
}

json to_json(const FeatureSpec& spec) {
  json arr = json::array();
  for (const auto& e : spec.entries) {
    json item;
    item["name"] = e.name();
    item["code"] = std::string(code_name(e.code));
    item["buffer_m"] = e.buffer_m ? json(*e.buffer_m) : json(nullptr);
    json signs = json::object();
    for (const auto& [p, s] : e.expected_sign) signs[std::string(to_string(p))] = std::string(sign_name(s));
    item["expected_sign"] = signs;
    arr.push_back(item);
  }
  return arr;
}

FeatureSpec feature_spec_from_json(const json& j) {
  FeatureSpec spec;
  try {
    for (const auto& item : j) {
      FeatureEntry e;
      e.code = parse_code(item.at("code").get<std::string>());
      if (item.contains("buffer_m") && !item["buffer_m"].is_null()) e.buffer_m = item["buffer_m"].get<int>();
      if (item.contains("expected_sign"))
        for (const auto& [p, s] : item["expected_sign"].items())
          e.expected_sign[parse_pollutant(p)] = parse_sign(s.get<std::string>());
      spec.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DomainError(fmt::format("feature spec: {}", e.what()));
  }
  spec.validate();
  return spec;
}

}  // namespace lur::features
