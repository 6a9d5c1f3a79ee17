#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "invarbin/dataset.hpp"
#include "invarbin/regression.hpp"
#include "invarbin/stats.hpp"

namespace invarbin {

/// Candidate (k, S): target column and conditioning columns, 0-based
/// encoded indices. `conditioning` is sorted and never contains `target`.
struct Pair {
  int target = 0;
  IndexList conditioning;

  friend bool operator==(const Pair&, const Pair&) = default;
};

std::string to_string(const Pair& pair, const std::vector<std::string>& names = {});

enum class Verdict { accepted, rejected, skipped };
enum class BonferroniScope { env, env_and_class };
enum class Regressor { ols, spline };

std::string_view to_string(Verdict v);
std::string_view to_string(BonferroniScope s);
BonferroniScope bonferroni_scope_from_string(std::string_view text);

struct InvarianceOptions {
  double alpha = 0.1;
  Regressor regressor = Regressor::ols;
  BonferroniScope scope = BonferroniScope::env;
  SplineOptions spline;
};

/// One (environment, class) cell of the residual test.
struct CellPValue {
  int env = 0;  // index into the dataset's environment registry
  int cls = 0;
  double t_statistic = 0.0;
  double raw = 1.0;
  double adjusted = 1.0;
};

struct InvarianceReport {
  Pair pair;
  std::vector<CellPValue> cells;
  /// min over environments of the adjusted p-values, per class.
  std::array<double, 2> min_adjusted{1.0, 1.0};
  Verdict verdict = Verdict::skipped;
  std::string reason;
  double alpha = 0.1;

  bool accepted() const { return verdict == Verdict::accepted; }
};

/// Accept iff both classes' minimum adjusted p-values exceed alpha.
Verdict decide(const std::array<double, 2>& min_adjusted, double alpha);

/// Welch test on residual moments (unbiased variances). Variances below
/// 1e-12 * spread are treated as exact zeros, and if both vanish, means within
/// 1e-9 * sqrt(spread) as equal; `spread` is the variance of X_k. Exact fits
/// thus test as invariant rather than on round-off.
TTestResult residual_welch(double mean_a, double var_a, double n_a, double mean_b, double var_b, double n_b,
                           double spread);

/// Residual distribution test over the training environments of `d` (test
/// rows are ignored). The class regressions are fitted on pooled training
/// rows and every environment is compared with the rest under the same fit.
InvarianceReport residual_distribution_test(const MultiEnvDataset& d, const Pair& pair,
                                            const InvarianceOptions& options = {});

/// OLS-only version of residual_distribution_test driven by per-environment
/// cross-product matrices, for screening thousands of pairs cheaply. Builds
/// its sufficient statistics once; testing a pair never touches the rows.
class InvarianceScreen {
 public:
  InvarianceScreen(const MultiEnvDataset& d, InvarianceOptions options = {});
  ~InvarianceScreen();
  InvarianceScreen(InvarianceScreen&&) noexcept;
  InvarianceScreen& operator=(InvarianceScreen&&) noexcept;

  InvarianceReport test(const Pair& pair) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace invarbin
