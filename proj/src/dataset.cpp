#include "invarbin/dataset.hpp"

#include <algorithm>

#include "invarbin/error.hpp"

namespace invarbin {

std::string_view to_string(EnvRole role) { return role == EnvRole::train ? "train" : "test"; }

EnvRole env_role_from_string(std::string_view text) {
  if (text == "train") return EnvRole::train;
  if (text == "test") return EnvRole::test;
  fail(ErrorKind::schema, "environment role must be 'train' or 'test', got '" + std::string(text) + "'");
}

MultiEnvDataset::MultiEnvDataset(Matrix features, Eigen::VectorXi response, std::vector<int> env_of,
                                 std::vector<EnvironmentId> environments,
                                 std::vector<std::string> column_names,
                                 std::vector<int> column_group, std::vector<std::string> group_names)
    : features_(std::move(features)),
      response_(std::move(response)),
      env_of_(std::move(env_of)),
      environments_(std::move(environments)),
      column_names_(std::move(column_names)),
      column_group_(std::move(column_group)),
      group_names_(std::move(group_names)) {
  const auto n = features_.rows();
  require(response_.size() == n, ErrorKind::validation, "response length differs from row count");
  require(static_cast<Eigen::Index>(env_of_.size()) == n, ErrorKind::validation,
          "env_of length differs from row count");
  require(static_cast<Eigen::Index>(column_names_.size()) == features_.cols(), ErrorKind::validation,
          "column_names length differs from column count");
  require(static_cast<Eigen::Index>(column_group_.size()) == features_.cols(), ErrorKind::validation,
          "column_group length differs from column count");
  for (int g : column_group_) {
    require(g >= 0 && g < static_cast<int>(group_names_.size()), ErrorKind::validation,
            "column group out of range");
  }
  env_sizes_.assign(environments_.size(), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(response_[i] == 0 || response_[i] == 1, ErrorKind::validation, "response must be 0 or 1");
    const int e = env_of_[static_cast<std::size_t>(i)];
    require(e >= 0 && e < static_cast<int>(environments_.size()), ErrorKind::validation,
            "row refers to an unregistered environment");
    ++env_sizes_[static_cast<std::size_t>(e)];
  }
}

MultiEnvDataset MultiEnvDataset::from_numeric(Matrix features, Eigen::VectorXi response,
                                              std::vector<int> env_of,
                                              std::vector<EnvironmentId> environments) {
  const auto m = static_cast<int>(features.cols());
  std::vector<std::string> names;
  std::vector<int> groups;
  for (int j = 0; j < m; ++j) {
    names.push_back("X" + std::to_string(j + 1));
    groups.push_back(j);
  }
  auto group_names = names;
  return MultiEnvDataset(std::move(features), std::move(response), std::move(env_of),
                         std::move(environments), std::move(names), std::move(groups),
                         std::move(group_names));
}

IndexList MultiEnvDataset::group_columns(int group) const {
  IndexList out;
  for (int j = 0; j < cols(); ++j) {
    if (column_group_[static_cast<std::size_t>(j)] == group) out.push_back(j);
  }
  return out;
}

int MultiEnvDataset::env_index(std::string_view label) const {
  for (std::size_t e = 0; e < environments_.size(); ++e) {
    if (environments_[e].label == label) return static_cast<int>(e);
  }
  fail(ErrorKind::lookup, "unknown environment '" + std::string(label) + "'");
}

IndexList MultiEnvDataset::rows_in_env(int env) const {
  IndexList out;
  for (int i = 0; i < rows(); ++i) {
    if (env_of_[static_cast<std::size_t>(i)] == env) out.push_back(i);
  }
  return out;
}

IndexList MultiEnvDataset::envs_with_role(EnvRole role) const {
  IndexList out;
  for (int e = 0; e < env_count(); ++e) {
    if (environments_[static_cast<std::size_t>(e)].role == role) out.push_back(e);
  }
  return out;
}

MultiEnvDataset MultiEnvDataset::select_rows(std::span<const int> rows) const {
  Matrix x(static_cast<Eigen::Index>(rows.size()), features_.cols());
  Eigen::VectorXi y(static_cast<Eigen::Index>(rows.size()));
  std::vector<int> env(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int i = rows[r];
    require(i >= 0 && i < this->rows(), ErrorKind::validation, "row index out of range");
    x.row(static_cast<Eigen::Index>(r)) = features_.row(i);
    y[static_cast<Eigen::Index>(r)] = response_[i];
    env[r] = env_of_[static_cast<std::size_t>(i)];
  }
  return MultiEnvDataset(std::move(x), std::move(y), std::move(env), environments_, column_names_,
                         column_group_, group_names_);
}

void MultiEnvDataset::require_nonempty_envs() const {
  for (std::size_t e = 0; e < environments_.size(); ++e) {
    require(env_sizes_[e] > 0, ErrorKind::validation,
            "environment '" + environments_[e].label + "' has no rows");
  }
}

bool MultiEnvDataset::classes_present_in_each(std::span<const int> envs) const {
  for (int e : envs) {
    bool seen[2] = {false, false};
    for (int i = 0; i < rows(); ++i) {
      if (env_of_[static_cast<std::size_t>(i)] == e) seen[response_[i]] = true;
    }
    if (!seen[0] || !seen[1]) return false;
  }
  return true;
}

std::pair<MultiEnvDataset, MultiEnvDataset> partition_by_env(const MultiEnvDataset& d,
                                                             std::string_view label) {
  const int e = d.env_index(label);
  IndexList in, out;
  for (int i = 0; i < d.rows(); ++i) {
    (d.env_of()[static_cast<std::size_t>(i)] == e ? in : out).push_back(i);
  }
  return {d.select_rows(in), d.select_rows(out)};
}

MultiEnvDataset class_slice(const MultiEnvDataset& d, int y) {
  IndexList rows;
  for (int i = 0; i < d.rows(); ++i) {
    if (d.response()[i] == y) rows.push_back(i);
  }
  return d.select_rows(rows);
}

MultiEnvDataset training_rows(const MultiEnvDataset& d) {
  const auto train = d.envs_with_role(EnvRole::train);
  IndexList rows;
  for (int i = 0; i < d.rows(); ++i) {
    if (std::find(train.begin(), train.end(), d.env_of()[static_cast<std::size_t>(i)]) != train.end()) {
      rows.push_back(i);
    }
  }
  return d.select_rows(rows);
}

int test_env_index(const MultiEnvDataset& d) {
  const auto tests = d.envs_with_role(EnvRole::test);
  require(tests.size() == 1, ErrorKind::validation,
          "expected exactly one test environment, found " + std::to_string(tests.size()));
  return tests.front();
}

Matrix gather(const Matrix& x, std::span<const int> rows, std::span<const int> cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x(rows[r], cols[c]);
    }
  }
  return out;
}

Vector gather(const Matrix& x, std::span<const int> rows, int col) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Eigen::Index>(r)] = x(rows[r], col);
  return out;
}

}  // namespace invarbin
