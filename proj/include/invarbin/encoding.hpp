#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "invarbin/csv.hpp"
#include "invarbin/dataset.hpp"

namespace invarbin {

enum class ColumnKind { numeric, categorical };
enum class MissingPolicy { drop_row, missing_as_category };

/// How raw CSV columns become encoded predictors.
///
/// Fields left empty are resolved from the data by `resolve_encoding`:
/// feature columns default to every column except env/response, kinds are
/// sniffed (numeric when every non-missing value parses), and categories are
/// the sorted distinct values. The first category of a column is its
/// reference level and gets no indicator column.
struct EncodingSpec {
  std::vector<std::string> columns;
  std::map<std::string, ColumnKind> kinds;
  std::map<std::string, std::vector<std::string>> categories;
  MissingPolicy missing_policy = MissingPolicy::drop_row;
  std::vector<std::string> missing_tokens{"", "?", "NA"};
  std::map<std::string, int> response_map;
  std::map<std::string, EnvRole> env_map;

  bool is_missing(const std::string& value) const;
};

EncodingSpec resolve_encoding(const CsvTable& table, EncodingSpec spec,
                              const std::string& env_column,
                              const std::string& response_column);

/// Applies a spec to a parsed table. Unknown categories encode as all zeros
/// for their group.
MultiEnvDataset encode_table(const CsvTable& table, const EncodingSpec& spec,
                             const std::string& env_column,
                             const std::string& response_column);

MultiEnvDataset load_csv(const std::filesystem::path& path, const EncodingSpec& spec,
                         const std::string& env_column, const std::string& response_column,
                         const CsvReadOptions& options = {});

void to_json(nlohmann::json& j, const EncodingSpec& spec);
void from_json(const nlohmann::json& j, EncodingSpec& spec);

EncodingSpec load_encoding_spec(const std::filesystem::path& path);

}  // namespace invarbin
