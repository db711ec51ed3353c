#include "lur/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "lur/stats.hpp"

namespace lur::features {

std::string_view code_name(FeatureCode code) {
  switch (code) {
    case FeatureCode::Elevation: return "Elevation";
    case FeatureCode::Lat: return "Lat";
    case FeatureCode::Long: return "Long";
    case FeatureCode::MajorRoadLength: return "MAJORROADLENGTH";
    case FeatureCode::RoadLength: return "ROADLENGTH";
    case FeatureCode::DistInvNear1: return "DISTINVNEAR1";
    case FeatureCode::TruckAadt: return "TRUCK_AADT";
    case FeatureCode::VehAadt: return "VEH_AADT";
  }
  return "?";
}

FeatureCode parse_code(std::string_view name) {
  for (auto code : kAllCodes)
    if (code_name(code) == name) return code;
  throw DomainError(fmt::format("unknown feature code '{}'", name));
}

bool is_buffered(FeatureCode code) {
  return code == FeatureCode::MajorRoadLength || code == FeatureCode::RoadLength;
}

std::string_view sign_name(Sign s) {
  switch (s) {
    case Sign::Positive: return "+";
    case Sign::Negative: return "-";
    case Sign::Any: return "any";
  }
  return "any";
}

Sign parse_sign(std::string_view text) {
  if (text == "+" || text == "positive") return Sign::Positive;
  if (text == "-" || text == "negative") return Sign::Negative;
  if (text == "any" || text.empty()) return Sign::Any;
  throw DomainError(fmt::format("unknown sign '{}' (expected +, - or any)", text));
}

std::string FeatureEntry::name() const {
  if (buffer_m) return fmt::format("{}_{}", code_name(code), *buffer_m);
  return std::string(code_name(code));
}

Sign FeatureEntry::sign_for(Pollutant p) const {
  auto it = expected_sign.find(p);
  return it == expected_sign.end() ? Sign::Any : it->second;
}

std::vector<std::string> FeatureSpec::names() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.name());
  return out;
}

const FeatureEntry* FeatureSpec::find(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name() == name) return &e;
  return nullptr;
}

double FeatureSpec::max_buffer() const {
  double m = 0.0;
  for (const auto& e : entries)
    if (e.buffer_m) m = std::max(m, static_cast<double>(*e.buffer_m));
  return m;
}

void FeatureSpec::validate() const {
  std::set<std::pair<FeatureCode, int>> seen;
  for (const auto& e : entries) {
    if (is_buffered(e.code) != e.buffer_m.has_value())
      throw DomainError(fmt::format("feature '{}': buffer required iff the family is buffered", e.name()));
    if (e.buffer_m && *e.buffer_m <= 0) throw DomainError(fmt::format("feature '{}': buffer must be > 0", e.name()));
    if (!seen.emplace(e.code, e.buffer_m.value_or(0)).second)
      throw DomainError(fmt::format("duplicate feature '{}'", e.name()));
  }
}

FeatureConfig FeatureConfig::defaults() {
  FeatureConfig cfg;
  for (auto code : {FeatureCode::MajorRoadLength, FeatureCode::RoadLength, FeatureCode::DistInvNear1,
                    FeatureCode::TruckAadt, FeatureCode::VehAadt}) {
    cfg.expected_signs[Pollutant::NO2][code] = Sign::Positive;
    cfg.expected_signs[Pollutant::O3][code] = Sign::Negative;
  }
  for (auto p : kAllPollutants)
    for (auto code : {FeatureCode::Elevation, FeatureCode::Lat, FeatureCode::Long})
      cfg.expected_signs[p][code] = Sign::Any;
  return cfg;
}

FeatureSpec FeatureConfig::full_spec() const {
  std::vector<int> sorted_buffers = buffers;
  std::sort(sorted_buffers.begin(), sorted_buffers.end());
  FeatureSpec spec;
  for (auto code : codes) {
    FeatureEntry proto;
    proto.code = code;
    for (const auto& [p, table] : expected_signs)
      if (auto it = table.find(code); it != table.end()) proto.expected_sign[p] = it->second;
    if (is_buffered(code)) {
      for (int b : sorted_buffers) {
        FeatureEntry e = proto;
        e.buffer_m = b;
        spec.entries.push_back(std::move(e));
      }
    } else {
      spec.entries.push_back(std::move(proto));
    }
  }
  spec.validate();
  return spec;
}

Location Location::from_geo(geo::GeoPoint g, geo::GeoPoint origin) {
  return from_planar(geo::project(g, origin), origin);
}

Location Location::from_planar(geo::PlanarPoint p, geo::GeoPoint origin) { return {p, geo::unproject(p, origin)}; }

std::optional<double> PredictorVector::get(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  return std::nullopt;
}

PredictorVector extract_predictors(const Location& where, const LandUse& land_use, const FeatureSpec& spec,
                                   double min_distance_m) {
  PredictorVector out;
  out.names.reserve(spec.entries.size());
  out.values.reserve(spec.entries.size());

  std::optional<std::optional<geo::NearestRoad>> nearest_major;
  auto major = [&]() -> const std::optional<geo::NearestRoad>& {
    if (!nearest_major) nearest_major = geo::nearest_road(where.planar, land_use.roads, geo::ClassFilter::MajorOnly);
    return *nearest_major;
  };

  for (const auto& e : spec.entries) {
    double v = 0.0;
    switch (e.code) {
      case FeatureCode::Elevation: {
        if (!land_use.elevation) throw DomainError("Elevation requested but no elevation grid loaded");
        const geo::PlanarPoint q = land_use.elevation_crs == ElevationCrs::Geographic
                                       ? geo::PlanarPoint{where.geo.lon, where.geo.lat}
                                       : where.planar;
        const auto sample = geo::elevation_at(*land_use.elevation, q);
        v = sample.value;
        out.flags.elevation_fallback = out.flags.elevation_fallback || sample.fallback;
        break;
      }
      case FeatureCode::Lat: v = where.geo.lat; break;
      case FeatureCode::Long: v = where.geo.lon; break;
      case FeatureCode::MajorRoadLength:
        v = geo::total_length_in_buffer(land_use.roads, where.planar, *e.buffer_m, geo::ClassFilter::MajorOnly);
        break;
      case FeatureCode::RoadLength:
        v = geo::total_length_in_buffer(land_use.roads, where.planar, *e.buffer_m, geo::ClassFilter::Any);
        break;
      case FeatureCode::DistInvNear1:
        if (const auto& hit = major()) {
          v = 1.0 / std::max(hit->distance, min_distance_m);
        } else {
          out.flags.no_major_road = true;
        }
        break;
      case FeatureCode::TruckAadt:
      case FeatureCode::VehAadt:
        if (const auto& hit = major()) {
          const auto& seg = land_use.roads.segments()[hit->segment];
          v = (e.code == FeatureCode::TruckAadt ? seg.truck_aadt : seg.veh_aadt).value_or(0.0);
        } else {
          out.flags.no_major_road = true;
        }
        break;
    }
    out.names.push_back(e.name());
    out.values.push_back(v);
  }

  const double reach = spec.max_buffer();
  if (reach > 0.0) {
    const auto ext = land_use.roads.extent();
    out.flags.edge_effect = ext && !ext->contains_disk(where.planar, reach);
  }
  return out;
}

std::size_t FeatureTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw DomainError(fmt::format("no predictor column '{}'", name));
}

std::vector<double> FeatureTable::column(std::string_view name) const { return values.column(column_index(name)); }

std::size_t FeatureTable::row_index(std::string_view id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return i;
  throw DomainError(fmt::format("no predictor row '{}'", id));
}

FeatureTable FeatureTable::select_columns(const std::vector<std::string>& names) const {
  std::vector<std::size_t> idx;
  for (const auto& n : names) idx.push_back(column_index(n));
  FeatureTable out;
  out.ids = ids;
  out.columns = names;
  out.flags = flags;
  out.values = Matrix(ids.size(), names.size());
  for (std::size_t r = 0; r < ids.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) out.values(r, c) = values(r, idx[c]);
  return out;
}

FeatureTable FeatureTable::select_rows(const std::vector<std::string>& row_ids) const {
  FeatureTable out;
  out.columns = columns;
  out.values = Matrix(0, columns.size());
  for (const auto& id : row_ids) {
    const auto r = row_index(id);
    out.ids.push_back(id);
    out.values.append_row(values.row(r));
    if (!flags.empty()) out.flags.push_back(flags[r]);
  }
  return out;
}

FeatureTable extract_table(std::span<const std::pair<std::string, Location>> points, const LandUse& land_use,
                           const FeatureSpec& spec, double min_distance_m) {
  FeatureTable table;
  table.columns = spec.names();
  table.values = Matrix(0, table.columns.size());
  for (const auto& [id, loc] : points) {
    auto pv = extract_predictors(loc, land_use, spec, min_distance_m);
    table.ids.push_back(id);
    table.values.append_row(pv.values);
    table.flags.push_back(pv.flags);
  }
  return table;
}

std::vector<std::string> SiteMeans::ids() const {
  std::vector<std::string> out;
  for (const auto& s : sites) out.push_back(s.site_id);
  return out;
}

std::vector<double> SiteMeans::values() const {
  std::vector<double> out;
  for (const auto& s : sites) out.push_back(s.mean_ppb);
  return out;
}

SiteMeans mean_concentrations(std::span<const HourlyRecord> records, TimeWindow window, Pollutant pollutant,
                              double completeness_min, std::span<const std::string> known_sites) {
  if (window.hours() <= 0) throw DomainError("mean_concentrations: empty window");
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& id : known_sites) acc[id];
  for (const auto& rec : records) {
    if (!window.contains(rec.time)) continue;
    auto& a = acc[rec.site_id];
    if (const auto v = rec.value(pollutant)) {
      a.sum += *v;
      ++a.n;
    }
  }

  SiteMeans out;
  out.pollutant = pollutant;
  const auto hours = static_cast<double>(window.hours());
  for (const auto& [id, a] : acc) {
    const double completeness = static_cast<double>(a.n) / hours;
    if (a.n > 0 && completeness >= completeness_min)
      out.sites.push_back({id, a.sum / static_cast<double>(a.n), a.n, completeness});
    else
      out.excluded.push_back({id, a.n, completeness});
  }
  if (out.sites.empty())
    throw PipelineError(fmt::format("no site meets the {:.0f}% completeness threshold for {}", 100 * completeness_min,
                                    to_string(pollutant)));
  return out;
}

Correlations correlate(const FeatureTable& table, std::span<const double> targets, const FeatureSpec& spec) {
  if (table.ids.size() != targets.size()) throw DomainError("correlate: row count mismatch");
  Correlations out;
  for (const auto& e : spec.entries) {
    const auto name = e.name();
    out[name] = stats::pearson(table.column(name), targets);
  }
  return out;
}

BufferSelection optimize_buffers(const FeatureTable& table, std::span<const double> targets, const FeatureSpec& spec,
                                 CorrelationMode mode) {
  if (table.ids.size() < 3) throw DomainError("optimize_buffers: need at least 3 sites");
  if (table.ids.size() != targets.size()) throw DomainError("optimize_buffers: row count mismatch");

  BufferSelection out;
  std::map<FeatureCode, std::size_t> family_slot;
  for (const auto& e : spec.entries) {
    if (!is_buffered(e.code) || family_slot.contains(e.code)) continue;
    FamilySelection fam;
    fam.code = e.code;
    std::vector<const FeatureEntry*> members;
    for (const auto& m : spec.entries)
      if (m.code == e.code) members.push_back(&m);
    std::sort(members.begin(), members.end(),
              [](const FeatureEntry* a, const FeatureEntry* b) { return *a->buffer_m < *b->buffer_m; });
    double best = -std::numeric_limits<double>::infinity();
    for (const auto* m : members) {
      const auto r = stats::pearson(table.column(m->name()), targets);
      fam.correlations.push_back({*m->buffer_m, r});
      if (!r) continue;
      const double score = mode == CorrelationMode::Absolute ? std::abs(*r) : *r;
      if (score > best) {
        best = score;
        fam.chosen_buffer = *m->buffer_m;
      }
    }
    if (!fam.chosen_buffer) out.dropped.push_back(fam.code);
    family_slot[e.code] = out.families.size();
    out.families.push_back(std::move(fam));
  }

  std::set<FeatureCode> emitted;
  for (const auto& e : spec.entries) {
    if (!is_buffered(e.code)) {
      out.spec.entries.push_back(e);
      continue;
    }
    if (emitted.contains(e.code)) continue;
    const auto& fam = out.families[family_slot.at(e.code)];
    if (!fam.chosen_buffer) continue;
    for (const auto& m : spec.entries) {
      if (m.code == e.code && m.buffer_m == fam.chosen_buffer) {
        out.spec.entries.push_back(m);
        break;
      }
    }
    emitted.insert(e.code);
  }
  return out;
}

SignFilterResult filter_by_sign(const FeatureSpec& spec, const Correlations& correlations, Pollutant pollutant) {
  SignFilterResult out;
  for (const auto& e : spec.entries) {
    const auto it = correlations.find(e.name());
    const std::optional<double> r = it == correlations.end() ? std::nullopt : it->second;
    const Sign s = e.sign_for(pollutant);
    const bool contradicts = r && ((s == Sign::Positive && *r < 0.0) || (s == Sign::Negative && *r > 0.0));
    if (contradicts)
      out.removed.push_back(e.name());
    else
      out.spec.entries.push_back(e);
  }
  out.infeasible = out.spec.entries.empty();
  return out;
}

Approach parse_approach(int value) {
  if (value < 1 || value > 3) throw DomainError(fmt::format("approach must be 1, 2 or 3 (got {})", value));
  return static_cast<Approach>(value);
}

Selection select_predictors(const FeatureTable& table, std::span<const double> targets, const FeatureConfig& config,
                            Pollutant pollutant, Approach approach) {
  Selection out;
  out.approach = approach;
  const FeatureSpec full = config.full_spec();
  out.correlations = correlate(table, targets, full);
  if (approach == Approach::AllPredictors) {
    out.spec = full;
    return out;
  }
  out.buffers = optimize_buffers(table, targets, full, config.buffer_corr);
  out.spec = out.buffers->spec;
  if (approach == Approach::SignFiltered) {
    out.signs = filter_by_sign(out.spec, out.correlations, pollutant);
    out.spec = out.signs->spec;
    out.infeasible = out.signs->infeasible;
  }
  return out;
}

}  // namespace lur::features
