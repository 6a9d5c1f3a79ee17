#include "invarbin/encoding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "invarbin/error.hpp"

namespace invarbin {
namespace {

bool parse_number(const std::string& text, double& value) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  return res.ec == std::errc{} && res.ptr == last && std::isfinite(value);
}

std::string_view kind_name(ColumnKind k) { return k == ColumnKind::numeric ? "numeric" : "categorical"; }

ColumnKind kind_from_name(const std::string& s) {
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "categorical" || s == "one-hot" || s == "onehot") return ColumnKind::categorical;
  fail(ErrorKind::schema, "unknown column kind '" + s + "'");
}

std::string_view policy_name(MissingPolicy p) {
  return p == MissingPolicy::drop_row ? "drop_row" : "missing_as_category";
}

MissingPolicy policy_from_name(const std::string& s) {
  if (s == "drop_row" || s == "drop-row") return MissingPolicy::drop_row;
  if (s == "missing_as_category" || s == "missing-as-category") return MissingPolicy::missing_as_category;
  fail(ErrorKind::schema, "unknown missing_policy '" + s + "'");
}

}  // namespace

bool EncodingSpec::is_missing(const std::string& value) const {
  return std::find(missing_tokens.begin(), missing_tokens.end(), value) != missing_tokens.end();
}

EncodingSpec resolve_encoding(const CsvTable& table, EncodingSpec spec, const std::string& env_column,
                              const std::string& response_column) {
  require(table.has_column(env_column), ErrorKind::schema, "missing environment column '" + env_column + "'");
  require(table.has_column(response_column), ErrorKind::schema,
          "missing response column '" + response_column + "'");
  if (spec.columns.empty()) {
    for (const auto& name : table.header) {
      if (name != env_column && name != response_column) spec.columns.push_back(name);
    }
  }
  for (const auto& name : spec.columns) {
    require(name != env_column && name != response_column, ErrorKind::schema,
            "column '" + name + "' cannot be both a feature and env/response");
    const std::size_t c = table.column_index(name);
    if (!spec.kinds.contains(name)) {
      bool numeric = true;
      for (const auto& row : table.rows) {
        double v;
        if (!spec.is_missing(row[c]) && !parse_number(row[c], v)) {
          numeric = false;
          break;
        }
      }
      spec.kinds[name] = numeric ? ColumnKind::numeric : ColumnKind::categorical;
    }
    if (spec.kinds[name] == ColumnKind::categorical && !spec.categories.contains(name)) {
      std::set<std::string> levels;
      for (const auto& row : table.rows) {
        if (!spec.is_missing(row[c]) || spec.missing_policy == MissingPolicy::missing_as_category) {
          levels.insert(row[c]);
        }
      }
      spec.categories[name] = std::vector<std::string>(levels.begin(), levels.end());
    }
  }
  return spec;
}

MultiEnvDataset encode_table(const CsvTable& table, const EncodingSpec& raw_spec,
                             const std::string& env_column, const std::string& response_column) {
  const EncodingSpec spec = resolve_encoding(table, raw_spec, env_column, response_column);
  const std::size_t env_c = table.column_index(env_column);
  const std::size_t resp_c = table.column_index(response_column);

  struct Group {
    std::size_t source;
    ColumnKind kind;
    std::vector<std::string> levels;  // non-reference levels
    int first_col;
  };
  std::vector<Group> groups;
  std::vector<std::string> column_names;
  std::vector<int> column_group;
  std::vector<std::string> group_names;
  for (const auto& name : spec.columns) {
    Group g{table.column_index(name), spec.kinds.at(name), {}, static_cast<int>(column_names.size())};
    if (g.kind == ColumnKind::numeric) {
      column_names.push_back(name);
      column_group.push_back(static_cast<int>(group_names.size()));
    } else {
      const auto& cats = spec.categories.at(name);
      for (std::size_t l = 1; l < cats.size(); ++l) {
        g.levels.push_back(cats[l]);
        column_names.push_back(name + "=" + cats[l]);
        column_group.push_back(static_cast<int>(group_names.size()));
      }
    }
    group_names.push_back(name);
    groups.push_back(std::move(g));
  }

  // Environment registry: spec order when given, else first appearance.
  std::vector<EnvironmentId> envs;
  auto env_lookup = [&](const std::string& label) -> int {
    for (std::size_t e = 0; e < envs.size(); ++e) {
      if (envs[e].label == label) return static_cast<int>(e);
    }
    return -1;
  };
  if (!spec.env_map.empty()) {
    for (const auto& [label, role] : spec.env_map) envs.push_back({label, role});
  }

  std::vector<std::size_t> kept;
  std::vector<int> env_of;
  std::vector<int> response;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = r < table.source_lines.size() ? table.source_lines[r] : r + 2;
    // Env/response and numeric gaps always drop the row; categorical gaps
    // drop it only under drop_row.
    bool missing = spec.is_missing(row[env_c]) || spec.is_missing(row[resp_c]);
    for (const auto& g : groups) {
      if (spec.is_missing(row[g.source]) &&
          (g.kind == ColumnKind::numeric || spec.missing_policy == MissingPolicy::drop_row)) {
        missing = true;
      }
    }
    if (missing) continue;
    int y;
    if (spec.response_map.empty()) {
      if (row[resp_c] == "0") {
        y = 0;
      } else if (row[resp_c] == "1") {
        y = 1;
      } else {
        fail(ErrorKind::schema, "row " + std::to_string(line) + ": response '" + row[resp_c] +
                                    "' is not 0/1 and no response_map is given");
      }
    } else {
      const auto it = spec.response_map.find(row[resp_c]);
      if (it == spec.response_map.end()) {
        fail(ErrorKind::schema, "row " + std::to_string(line) + ": response '" + row[resp_c] +
                                    "' not in response_map");
      }
      y = it->second;
      require(y == 0 || y == 1, ErrorKind::schema, "response_map values must be 0 or 1");
    }
    int e = env_lookup(row[env_c]);
    if (e < 0) {
      require(spec.env_map.empty(), ErrorKind::schema,
              "row " + std::to_string(line) + ": environment '" + row[env_c] + "' not in env_map");
      envs.push_back({row[env_c], EnvRole::train});
      e = static_cast<int>(envs.size()) - 1;
    }
    kept.push_back(r);
    env_of.push_back(e);
    response.push_back(y);
  }

  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(kept.size()), static_cast<Eigen::Index>(column_names.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const auto& row = table.rows[kept[i]];
    const std::size_t line = kept[i] < table.source_lines.size() ? table.source_lines[kept[i]] : kept[i] + 2;
    for (const auto& g : groups) {
      const std::string& cell = row[g.source];
      if (g.kind == ColumnKind::numeric) {
        double v;
        if (!parse_number(cell, v)) throw ParseError(line, "non-numeric value '" + cell + "'");
        x(static_cast<Eigen::Index>(i), g.first_col) = v;
      } else {
        const auto it = std::find(g.levels.begin(), g.levels.end(), cell);
        if (it != g.levels.end()) {
          x(static_cast<Eigen::Index>(i), g.first_col + static_cast<int>(it - g.levels.begin())) = 1.0;
        }
      }
    }
  }
  Eigen::VectorXi yv(static_cast<Eigen::Index>(response.size()));
  for (std::size_t i = 0; i < response.size(); ++i) yv[static_cast<Eigen::Index>(i)] = response[i];

  MultiEnvDataset d(std::move(x), std::move(yv), std::move(env_of), std::move(envs), std::move(column_names),
                    std::move(column_group), std::move(group_names));
  d.require_nonempty_envs();
  return d;
}

MultiEnvDataset load_csv(const std::filesystem::path& path, const EncodingSpec& spec,
                         const std::string& env_column, const std::string& response_column,
                         const CsvReadOptions& options) {
  return encode_table(read_csv(path, options), spec, env_column, response_column);
}

void to_json(nlohmann::json& j, const EncodingSpec& spec) {
  j = nlohmann::json::object();
  j["columns"] = spec.columns;
  nlohmann::json kinds = nlohmann::json::object();
  for (const auto& [name, kind] : spec.kinds) kinds[name] = kind_name(kind);
  j["kinds"] = kinds;
  j["categories"] = spec.categories;
  j["missing_policy"] = policy_name(spec.missing_policy);
  j["missing_tokens"] = spec.missing_tokens;
  j["response_map"] = spec.response_map;
  nlohmann::json envs = nlohmann::json::object();
  for (const auto& [label, role] : spec.env_map) envs[label] = to_string(role);
  j["env_map"] = envs;
}

void from_json(const nlohmann::json& j, EncodingSpec& spec) {
  spec = EncodingSpec{};
  if (j.contains("columns")) spec.columns = j.at("columns").get<std::vector<std::string>>();
  if (j.contains("kinds")) {
    for (const auto& [name, kind] : j.at("kinds").items()) spec.kinds[name] = kind_from_name(kind.get<std::string>());
  }
  if (j.contains("categories")) {
    spec.categories = j.at("categories").get<std::map<std::string, std::vector<std::string>>>();
  }
  if (j.contains("missing_policy")) spec.missing_policy = policy_from_name(j.at("missing_policy").get<std::string>());
  if (j.contains("missing_tokens")) spec.missing_tokens = j.at("missing_tokens").get<std::vector<std::string>>();
  if (j.contains("response_map")) spec.response_map = j.at("response_map").get<std::map<std::string, int>>();
  if (j.contains("env_map")) {
    for (const auto& [label, role] : j.at("env_map").items()) {
      spec.env_map[label] = env_role_from_string(role.get<std::string>());
    }
  }
}

EncodingSpec load_encoding_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, "invalid encoding spec JSON: " + std::string(e.what()));
  }
  return j.get<EncodingSpec>();
}

}  // namespace invarbin
