#pragma once

#include <optional>
#include <vector>

#include "invarbin/dataset.hpp"
#include "invarbin/invariance.hpp"
#include "invarbin/regression.hpp"

namespace invarbin {

/// Pooled logistic regression on every training row and feature.
LogisticModel fit_lr_baseline(const MultiEnvDataset& d, const LogisticOptions& options = {});

enum class IcpResidual { pearson, deviance };

struct IcpSetResult {
  IndexList columns;       // encoded columns of the subset
  std::vector<int> groups; // raw-column groups forming the subset
  double p_value = 0.0;    // min over environments of the adjusted p-values
  bool accepted = false;
};

struct IcpResult {
  std::vector<IcpSetResult> tested;
  std::vector<IndexList> accepted_sets;
  IndexList intersection;
  std::optional<LogisticModel> model;
  double alpha = 0.1;
  IcpResidual residual = IcpResidual::pearson;

  bool abstained() const { return !model.has_value(); }
};

struct IcpOptions {
  double alpha = 0.1;
  /// Pearson residuals have conditional mean zero under the fitted model, so
  /// a shift in X alone does not move their environment means.
  IcpResidual residual = IcpResidual::pearson;
  int max_subset_size = -1;  // negative: default_subset_cap(groups)
  LogisticOptions logistic;
  int threads = 0;
};

/// Binary invariant causal prediction. For each subset S of raw-column groups
/// (|S| up to the cap, including the empty set), a pooled logistic fit of Y
/// on X_S yields residuals; each training environment's residuals are
/// compared with the rest by a Welch test, Bonferroni-adjusted by the
/// environment count. S is accepted when every adjusted p-value exceeds
/// alpha. The final model is fitted on the intersection of accepted sets;
/// an empty intersection or no accepted set means abstention.
IcpResult fit_icp(const MultiEnvDataset& d, const IcpOptions& options = {});

/// Labels at the 0.5 threshold (ties to 1).
Eigen::VectorXi predict_labels(const LogisticModel& model, const MatrixRef& x);

/// nullopt for an abstaining ICP result.
std::optional<Eigen::VectorXi> predict_baseline(const IcpResult& icp, const MatrixRef& x);
std::optional<Eigen::VectorXi> predict_baseline(const LogisticModel& model, const MatrixRef& x);

/// Signed deviance residuals sign(y - p) * sqrt(-2 log-likelihood).
Vector deviance_residuals(const VectorRef& y, const VectorRef& p);
/// (y - p) / sqrt(p (1 - p)), with p kept away from 0 and 1.
Vector pearson_residuals(const VectorRef& y, const VectorRef& p);

}  // namespace invarbin
