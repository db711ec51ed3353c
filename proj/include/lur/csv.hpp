#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lur::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the source file
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Index of a header column, or nullopt.
  [[nodiscard]] std::optional<std::size_t> find(std::string_view name) const;
  /// Index of a header column; throws DomainError naming the file column.
  [[nodiscard]] std::size_t require(std::string_view name) const;
};

/// Splits one CSV record. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_line(std::string_view line);

/// Reads a CSV file with a header row. Blank lines are skipped.
Table read(const std::filesystem::path& path);

/// Strict double parse of a whole (trimmed) field. Blank -> nullopt;
/// garbage or non-finite -> DomainError.
std::optional<double> parse_optional_double(std::string_view field);

/// Shortest representation that round-trips exactly; NaN -> empty field.
std::string format_number(double value);
std::string format_optional(const std::optional<double>& value);

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
};

}  // namespace lur::csv
