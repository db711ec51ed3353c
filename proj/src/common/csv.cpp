#include "lur/csv.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "lur/common.hpp"

namespace lur::csv {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool needs_quotes(std::string_view s) { return s.find_first_of(",\"\n") != std::string_view::npos; }

}  // namespace

std::optional<std::size_t> Table::find(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

std::size_t Table::require(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw DomainError(fmt::format("missing required column '{}'", name));
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.emplace_back(trim(field));
  return out;
}

Table read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError(fmt::format("cannot open '{}'", path.string()));
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (!have_header) {
      if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
      table.header = split_line(line);
      have_header = true;
      continue;
    }
    table.rows.push_back({line_no, split_line(line)});
  }
  if (!have_header) throw DomainError(fmt::format("'{}' has no header row", path.string()));
  return table;
}

std::optional<double> parse_optional_double(std::string_view field) {
  const auto s = trim(field);
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return std::nullopt;
  double value = 0.0;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value))
    throw DomainError(fmt::format("not a number: '{}'", s));
  return value;
}

std::string format_number(double value) {
  if (std::isnan(value)) return {};
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{}", value);
}

std::string format_optional(const std::optional<double>& value) {
  return value ? format_number(*value) : std::string{};
}

Writer::Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw PipelineError(fmt::format("cannot write '{}'", path.string()));
}

void Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    if (needs_quotes(fields[i])) {
      out_ << '"';
      for (char c : fields[i]) {
        if (c == '"') out_ << '"';
        out_ << c;
      }
      out_ << '"';
    } else {
      out_ << fields[i];
    }
  }
  out_ << '\n';
}

}  // namespace lur::csv
