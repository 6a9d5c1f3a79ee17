#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace invarbin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IndexList = std::vector<int>;

enum class EnvRole { train, test };

struct EnvironmentId {
  std::string label;
  EnvRole role = EnvRole::train;

  friend bool operator==(const EnvironmentId&, const EnvironmentId&) = default;
};

std::string_view to_string(EnvRole role);
EnvRole env_role_from_string(std::string_view text);

/// Environment-labelled feature matrix with a binary response.
///
/// Immutable after construction; safe to share across threads. Encoded
/// columns belong to groups (one group per raw column, so a one-hot block is
/// a single group). Row subsets keep the full environment registry, so an
/// environment may be empty in a subset.
class MultiEnvDataset {
 public:
  MultiEnvDataset() = default;
  MultiEnvDataset(Matrix features, Eigen::VectorXi response, std::vector<int> env_of,
                  std::vector<EnvironmentId> environments,
                  std::vector<std::string> column_names, std::vector<int> column_group,
                  std::vector<std::string> group_names);

  /// Convenience: numeric columns, one group per column, names X1..Xm.
  static MultiEnvDataset from_numeric(Matrix features, Eigen::VectorXi response,
                                      std::vector<int> env_of,
                                      std::vector<EnvironmentId> environments);

  int rows() const { return static_cast<int>(features_.rows()); }
  int cols() const { return static_cast<int>(features_.cols()); }
  const Matrix& features() const { return features_; }
  const Eigen::VectorXi& response() const { return response_; }
  const std::vector<int>& env_of() const { return env_of_; }
  const std::vector<EnvironmentId>& environments() const { return environments_; }
  int env_count() const { return static_cast<int>(environments_.size()); }
  const std::vector<int>& env_sizes() const { return env_sizes_; }
  int env_size(int env) const { return env_sizes_.at(static_cast<std::size_t>(env)); }

  const std::vector<std::string>& column_names() const { return column_names_; }
  const std::vector<int>& column_group() const { return column_group_; }
  const std::vector<std::string>& group_names() const { return group_names_; }
  int group_count() const { return static_cast<int>(group_names_.size()); }
  /// Encoded columns belonging to a group, ascending.
  IndexList group_columns(int group) const;

  /// Index of an environment label; throws Error(lookup) when unknown.
  int env_index(std::string_view label) const;
  IndexList rows_in_env(int env) const;
  IndexList envs_with_role(EnvRole role) const;

  MultiEnvDataset select_rows(std::span<const int> rows) const;

  /// Every registered environment has at least one row.
  void require_nonempty_envs() const;
  /// Each listed environment holds at least one sample of each class.
  bool classes_present_in_each(std::span<const int> envs) const;

 private:
  Matrix features_;
  Eigen::VectorXi response_;
  std::vector<int> env_of_;
  std::vector<EnvironmentId> environments_;
  std::vector<int> env_sizes_;
  std::vector<std::string> column_names_;
  std::vector<int> column_group_;
  std::vector<std::string> group_names_;
};

/// Rows in environment `label` and rows outside it.
std::pair<MultiEnvDataset, MultiEnvDataset> partition_by_env(const MultiEnvDataset& d,
                                                             std::string_view label);

/// Rows whose response equals `y` (possibly none).
MultiEnvDataset class_slice(const MultiEnvDataset& d, int y);

/// Rows of all training environments.
MultiEnvDataset training_rows(const MultiEnvDataset& d);

/// The unique test environment's index; throws Error(validation) otherwise.
int test_env_index(const MultiEnvDataset& d);

/// Column submatrix X(rows, cols) copied into a dense matrix.
Matrix gather(const Matrix& x, std::span<const int> rows, std::span<const int> cols);
Vector gather(const Matrix& x, std::span<const int> rows, int col);

}  // namespace invarbin
