#include <array>
#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "lur/pipeline.hpp"

namespace lur::pipeline {

using nlohmann::json;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw PipelineError("SHA-256 initialisation failed");
  }
  void update(const void* data, std::size_t n) {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw PipelineError("SHA-256 update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md.data(), &len) != 1) throw PipelineError("SHA-256 finalisation failed");
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError(fmt::format("cannot read '{}'", path.string()));
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

void write_manifest(const RunConfig& cfg, double wall_clock_s) {
  json m;
  m["artifact"] = "lur";
  m["version"] = std::string(kVersion);
  m["format_version"] = 1;
  m["seed"] = cfg.seed;
  m["utc_offset_hours"] = cfg.utc_offset_hours;
  m["config"] = to_json(cfg);
  m["config_sha256"] = cfg.config_path.empty() ? sha256_hex(to_json(cfg).dump()) : sha256_file(cfg.config_path);
  m["resolved_config_sha256"] = sha256_hex(to_json(cfg).dump());

  json inputs = json::object();
  auto add_input = [&](const char* name, const std::filesystem::path& p) {
    inputs[name] = {{"path", p.string()}, {"sha256", sha256_file(p)}};
  };
  add_input("sites", cfg.sites);
  add_input("observations", cfg.observations);
  add_input("roads", cfg.roads);
  add_input("elevation", cfg.elevation);
  if (cfg.feature_spec) add_input("feature_spec", *cfg.feature_spec);
  m["inputs"] = inputs;

  m["libraries"] = {{"compiler", fmt::format("{} {}", __VERSION__, __cplusplus)},
                    {"fmt", FMT_VERSION},
                    {"nlohmann_json", fmt::format("{}.{}.{}", NLOHMANN_JSON_VERSION_MAJOR, NLOHMANN_JSON_VERSION_MINOR,
                                                  NLOHMANN_JSON_VERSION_PATCH)},
                    {"rng", "xoshiro256** seeded by splitmix64"}};
  m["wall_clock_s"] = wall_clock_s;

  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(cfg.output_dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::ranges::sort(files);
  json outputs = json::object();
  for (const auto& f : files)
    outputs[std::filesystem::relative(f, cfg.output_dir).generic_string()] = {
        {"sha256", sha256_file(f)}, {"bytes", std::filesystem::file_size(f)}};
  m["outputs"] = outputs;

  std::ofstream out(cfg.output_dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) throw PipelineError("cannot write manifest.json");
  out << m.dump(2) << '\n';
}

}  // namespace lur::pipeline
