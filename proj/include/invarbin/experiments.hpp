#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "invarbin/bimp.hpp"
#include "invarbin/dataset.hpp"
#include "invarbin/encoding.hpp"
#include "invarbin/evaluation.hpp"
#include "invarbin/serialize.hpp"
#include "invarbin/simgen.hpp"

namespace invarbin {

inline const std::vector<std::string> kAllMethods{"bimp-linear", "bimp-gam", "lr", "icp"};

/// Validates and de-duplicates method names, keeping the canonical order.
std::vector<std::string> parse_methods(const std::vector<std::string>& names);

struct ExperimentOptions {
  BimpOptions bimp;            // variant is overridden per method
  std::vector<std::string> methods = kAllMethods;
  bool timing = false;
  /// Keep per-pair invariance reports in the outputs.
  bool keep_reports = false;
};

struct MethodOutput {
  RunSummary summary;
  /// Test-row predictions; empty when the method abstained.
  Vector probabilities;
  Eigen::VectorXi labels;
  std::vector<char> flags;  // bIMP base-rate fallback rows
  Json model;
  Json reports;             // invariance reports (bIMP) or tested sets (ICP)
};

/// Fits every requested method on the training environments of `d` and
/// scores it on the test environment.
std::vector<MethodOutput> run_methods(const MultiEnvDataset& d, const ExperimentOptions& options,
                                      const std::string& environment, int replicate);

/// Test-environment feature rows and labels.
Matrix test_features(const MultiEnvDataset& d);
Eigen::VectorXi test_labels(const MultiEnvDataset& d);

// Reproduction targets.

struct Fig1Result {
  double accuracy_x3 = 0.0;  // pair (3, {1})
  double accuracy_x2 = 0.0;  // pair (2, {1})
  Vector x1;
  Eigen::VectorXi y;
  Vector yhat_x3;
  Vector yhat_x2;
  std::vector<char> degenerate_x3;
  std::vector<char> degenerate_x2;
};

Fig1Result run_fig1(std::uint64_t seed, int n_test = 10000, Variant variant = Variant::gam, int n_train = 5000);

struct SynthDrawRecord {
  int replicate = 0;
  std::uint64_t seed = 0;
  SynthDraw draw;
};

Json to_json(const SynthDrawRecord& r);

struct Fig2Result {
  std::vector<RunSummary> summaries;
  std::vector<SynthDrawRecord> draws;
};

/// Synthetic replicates. When `options.bimp.max_subset_size` is negative the
/// cap is raised to m - 1 per replicate so (1, {2..m}) is reachable.
Fig2Result run_fig2(int replicates, std::uint64_t seed, const ExperimentOptions& options);

/// Census splits. The test rows are college graduates (education in
/// Bachelors, Masters, Prof-school, Doctorate); training rows are split by
/// the environment rule. Drops education, fnlwgt and the splitting column.
enum class CensusSplit { born_in_us, overtime, caucasian };
std::string_view to_string(CensusSplit s);
inline const std::vector<CensusSplit> kCensusSplits{CensusSplit::born_in_us, CensusSplit::overtime,
                                                   CensusSplit::caucasian};

MultiEnvDataset load_census(const std::string& path, CensusSplit split,
                            MissingPolicy missing = MissingPolicy::drop_row);

/// Mushroom habitats: training grass and urban, test meadows or paths.
enum class MushroomTest { meadows, paths };
std::string_view to_string(MushroomTest t);

/// Raw mushroom columns used as predictors (all categorical).
const std::vector<std::string>& mushroom_feature_columns();
MultiEnvDataset load_mushroom(const std::string& path, MushroomTest test,
                              MissingPolicy missing = MissingPolicy::drop_row);

struct TableRow {
  std::string environment;
  std::vector<MethodOutput> outputs;
};

std::vector<TableRow> run_table1(const std::string& path, const ExperimentOptions& options,
                                 MissingPolicy missing = MissingPolicy::drop_row);
std::vector<TableRow> run_table2(const std::string& path, const ExperimentOptions& options,
                                 MissingPolicy missing = MissingPolicy::drop_row);

/// Environment x method accuracy grid (percent, one decimal; blank when the
/// method abstained).
void write_accuracy_table(const std::string& path, const std::vector<TableRow>& rows,
                          const std::vector<std::string>& methods);

/// Box plot of per-replicate accuracies per method.
void write_boxplot_svg(const std::string& path, const std::vector<RunSummary>& summaries,
                       const std::vector<std::string>& methods);

}  // namespace invarbin
