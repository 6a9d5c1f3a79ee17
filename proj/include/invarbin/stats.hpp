#pragma once

#include <span>

namespace invarbin {

struct TTestResult {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;  // two-sided
};

/// Standard normal CDF.
double normal_cdf(double x);

/// Regularized incomplete beta function I_x(a, b), a, b > 0, x in [0, 1].
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t with `df` degrees of freedom (df > 0, not necessarily
/// an integer).
double student_t_cdf(double t, double df);

/// Two-sided tail probability P(|T| >= |t|).
double student_t_two_sided(double t, double df);

/// Welch's unequal-variance two-sample t-test.
///
/// Throws Error(insufficient_data) if either sample has fewer than two values.
/// When both samples have zero variance the test degenerates: p = 1 if the
/// means coincide and p = 0 otherwise.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Welch test from summary statistics (`var_*` are unbiased sample
/// variances). Shared by the residual screens, which never materialize the
/// residual vectors.
TTestResult welch_t_test(double mean_a, double var_a, double n_a,
                         double mean_b, double var_b, double n_b);

/// min(1, |pvals| * min(pvals)).
double bonferroni_combine(std::span<const double> pvals);

/// min(1, count * p).
double bonferroni_adjust(double p, double count);

}  // namespace invarbin
