#include "invarbin/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "invarbin/error.hpp"

namespace invarbin {
namespace {

std::string_view trim_blanks(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::size_t CsvTable::column_index(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) fail(ErrorKind::lookup, "unknown column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable parse_csv(std::string_view text, const CsvReadOptions& options) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool field_quoted = false;
  bool in_quotes = false;
  bool record_has_content = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto finish_field = [&] {
    if (options.trim && !field_quoted) {
      field = std::string(trim_blanks(field));
    }
    record.push_back(std::move(field));
    field.clear();
    field_quoted = false;
  };

  auto finish_record = [&] {
    finish_field();
    const bool blank = !record_has_content;
    if (!blank) {
      if (table.header.empty() && options.has_header) {
        table.header = std::move(record);
      } else {
        if (table.header.empty()) {
          if (options.column_names.empty()) {
            fail(ErrorKind::parse, "headerless CSV needs column names");
          }
          table.header = options.column_names;
        }
        if (record.size() != table.header.size()) {
          throw ParseError(record_line, "expected " + std::to_string(table.header.size()) +
                                            " fields, found " + std::to_string(record.size()));
        }
        table.rows.push_back(std::move(record));
        table.source_lines.push_back(record_line);
      }
    }
    record.clear();
    record_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      if (!std::all_of(field.begin(), field.end(), [](char ch) { return ch == ' ' || ch == '\t'; })) {
        throw ParseError(line, "quote inside unquoted field");
      }
      field.clear();
      in_quotes = true;
      field_quoted = true;
      record_has_content = true;
    } else if (c == options.delimiter) {
      record_has_content = true;
      finish_field();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      finish_record();
      ++line;
      record_line = line;
    } else {
      if (field_quoted) throw ParseError(line, "characters after closing quote");
      if (c != ' ' && c != '\t') record_has_content = true;
      field.push_back(c);
    }
  }
  if (in_quotes) throw ParseError(record_line, "unterminated quoted field");
  if (record_has_content || !field.empty()) finish_record();
  if (table.header.empty()) {
    if (options.has_header) fail(ErrorKind::parse, "CSV has no header row");
    table.header = options.column_names;
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path, const CsvReadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), options);
}

std::string csv_escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos ||
                            (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

void write_csv(std::ostream& out, const CsvTable& table) {
  write_csv_row(out, table.header);
  for (const auto& row : table.rows) write_csv_row(out, row);
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write '" + path.string() + "'");
  write_csv(out, table);
  if (!out) fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

}  // namespace invarbin
