#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "invarbin/dataset.hpp"

namespace invarbin {

/// Fraction of matching labels. Throws Error(validation) on empty or
/// mismatched input.
double accuracy(const Eigen::VectorXi& predicted, const Eigen::VectorXi& truth);

/// Mean of (p - y)^2.
double mse(const Vector& probabilities, const Eigen::VectorXi& truth);

struct RunSummary {
  std::string method;
  std::string environment;
  int replicate = 0;
  std::optional<double> accuracy;  // blank when the method abstained
  std::optional<double> mse;
  bool abstained = false;
  int n_pairs = 0;
  std::optional<double> seconds;   // recorded only when timing is requested
};

struct MethodStats {
  std::string method;
  int runs = 0;
  double abstention_rate = 0.0;
  std::optional<double> accuracy_median, accuracy_q1, accuracy_q3;
  std::optional<double> mse_median, mse_q1, mse_q3;
};

/// Type-7 quantile of unsorted values.
double quantile(std::vector<double> values, double q);

/// Per-method order statistics over non-abstaining runs, methods in order of
/// first appearance after sorting by name (so input order is irrelevant).
std::vector<MethodStats> aggregate_replicates(const std::vector<RunSummary>& summaries);

/// Header: method,environment,replicate,accuracy,mse,abstained,n_pairs,seconds
void write_summary_csv(std::ostream& out, const std::vector<RunSummary>& rows);
void write_summary_csv(const std::string& path, const std::vector<RunSummary>& rows);

}  // namespace invarbin
