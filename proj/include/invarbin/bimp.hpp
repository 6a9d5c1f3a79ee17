#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "invarbin/dataset.hpp"
#include "invarbin/invariance.hpp"
#include "invarbin/regression.hpp"

namespace invarbin {

enum class Variant { linear, gam };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view text);

/// (marginal - h0) / (h1 - h0) clamped to [0, 1]; nullopt when
/// |h1 - h0| <= eps_den. Throws Error(validation) on non-finite input.
std::optional<double> bimp_ratio(double marginal, double h0, double h1, double eps_den);

/// All (k, S) with S drawn from the groups other than k's, |S| <= cap
/// (counted in groups). Order: k ascending, then |S| ascending, then
/// lexicographic over group indices. A negative cap means group_count - 1.
std::vector<Pair> enumerate_pairs(const MultiEnvDataset& d, int max_subset_size = -1);
/// Same over m ungrouped columns; default cap min(m - 1, 3).
std::vector<Pair> enumerate_pairs(int m, int max_subset_size = -1);
/// min(groups - 1, 3).
int default_subset_cap(int groups);

using MarginalModel = std::variant<LinearModel, AdditiveSplineModel>;

Vector predict(const MarginalModel& model, const MatrixRef& x);

/// Regressor for E[X_k | X_S] on one environment's features, OLS for the
/// linear variant and the additive spline for gam.
MarginalModel fit_marginal(const MatrixRef& xs, const VectorRef& xk, Variant variant,
                           const SplineOptions& spline = {});

struct PairModel {
  Pair pair;
  LinearModel h0;
  LinearModel h1;
  MarginalModel marginal;
  Variant variant = Variant::linear;
  /// Absolute denominator tolerance used by predict_pair.
  double eps_den = 0.0;
};

/// Class regressions on pooled training rows plus the marginal fitted on
/// `target_features` (full column set; only the pair's columns are read).
/// `eps_den_rel` scales the pooled training standard deviation of X_k.
PairModel fit_pair_model(const MultiEnvDataset& d_train, const MatrixRef& target_features, const Pair& pair,
                         Variant variant, double eps_den_rel = 1e-6, const SplineOptions& spline = {});

struct PairPrediction {
  Vector values;                  // in [0, 1]; meaningless where degenerate
  std::vector<char> degenerate;   // 1 where |h1 - h0| <= eps_den
  int degenerate_count = 0;
};

/// Row-wise ratio for a feature matrix with the dataset's full column set.
/// Throws Error(degenerate_pair) if every row is degenerate.
PairPrediction predict_pair(const PairModel& model, const MatrixRef& x);

/// Relative-slack score filter: indices (ascending) with score <=
/// (1 + tau) * min. Always contains the argmin. Empty input yields empty.
std::vector<std::size_t> score_filter(const std::vector<double>& scores, double tau);

/// Mean squared error on the training rows, with the marginal refitted on
/// each training environment's features. Degenerate rows use `base_rate`.
double pair_score(const MultiEnvDataset& d, const PairModel& model, double base_rate,
                  const SplineOptions& spline = {});

struct BimpOptions {
  double alpha = 0.1;
  Variant variant = Variant::linear;
  int max_subset_size = -1;  // negative: default_subset_cap
  double tau = 0.1;
  double eps_den = 1e-6;     // relative to the pooled sd of X_k
  BonferroniScope scope = BonferroniScope::env;
  SplineOptions spline;
  /// Drop a pair when more than this fraction of target rows is degenerate.
  double max_degenerate_fraction = 0.5;
  /// Worker count; 0 means the INVARBIN_THREADS default.
  int threads = 0;
  /// Build sub-models from per-row-set cross products instead of refitting
  /// from rows for every pair. Same estimates up to rounding.
  bool sufficient_statistics = true;
};

struct EnsembleModel {
  std::vector<PairModel> members;         // surviving pairs in enumeration order
  std::vector<Pair> candidates;           // accepted and non-degenerate, scored
  std::vector<double> scores;             // one per candidate
  double score_threshold = 0.0;
  double tau = 0.1;
  double base_rate = 0.5;                 // pooled training P(Y = 1)
  int pairs_tested = 0;
  int pairs_accepted = 0;
  int pairs_skipped = 0;
  int pairs_degenerate = 0;
  std::vector<InvarianceReport> reports;  // every tested pair

  bool abstained() const { return members.empty(); }
};

/// Full pipeline: enumerate, screen with the residual test, fit the accepted
/// pairs against the test environment's features, drop mostly-degenerate
/// pairs, score-filter, and keep the survivors.
EnsembleModel fit_bimp(const MultiEnvDataset& d, const BimpOptions& options = {});

struct BimpPrediction {
  Vector probabilities;
  Eigen::VectorXi labels;
  /// Rows degenerate under every pair; labelled by the base rate.
  std::vector<char> fallback;
};

/// Mean over pairs of the non-degenerate predictions per row; label is
/// probability >= 0.5. Throws Error(validation) on an abstaining ensemble.
BimpPrediction predict_bimp(const EnsembleModel& ens, const MatrixRef& x);

}  // namespace invarbin
