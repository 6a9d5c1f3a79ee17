#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace invarbin {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based physical line of each row in the source, for error messages.
  std::vector<std::size_t> source_lines;

  std::size_t column_index(std::string_view name) const;  // throws lookup
  bool has_column(std::string_view name) const;
};

struct CsvReadOptions {
  bool has_header = true;
  /// Header to use when `has_header` is false.
  std::vector<std::string> column_names;
  /// Strip unquoted leading/trailing blanks (the UCI files use ", ").
  bool trim = true;
  char delimiter = ',';
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
/// Blank lines are skipped. A row whose field count differs from the header
/// raises ParseError with its line number.
CsvTable parse_csv(std::string_view text, const CsvReadOptions& options = {});
CsvTable read_csv(const std::filesystem::path& path, const CsvReadOptions& options = {});

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);
void write_csv(std::ostream& out, const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Shortest decimal representation that round-trips the double.
std::string format_double(double value);

}  // namespace invarbin
