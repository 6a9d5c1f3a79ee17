#include "invarbin/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "invarbin/error.hpp"

namespace invarbin {
namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  fail(ErrorKind::validation, "incomplete beta continued fraction did not converge");
}

double log_beta(double a, double b) {
  using boost::math::lgamma;
  return lgamma(a) + lgamma(b) - lgamma(a + b);
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, ErrorKind::validation, "incomplete_beta: a, b must be positive");
  require(x >= 0.0 && x <= 1.0, ErrorKind::validation, "incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front =
      a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  require(df > 0.0, ErrorKind::validation, "student_t: df must be positive");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double t2 = t * t;
  // I_{df/(df+t^2)}(df/2, 1/2); switch to the complement for small |t| where
  // df/(df+t^2) is close to one.
  if (t2 < df) {
    const double x = t2 / (df + t2);
    return std::clamp(1.0 - incomplete_beta(0.5, 0.5 * df, x), 0.0, 1.0);
  }
  const double x = df / (df + t2);
  return std::clamp(incomplete_beta(0.5 * df, 0.5, x), 0.0, 1.0);
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided(t, df);
  return t < 0.0 ? tail : 1.0 - tail;
}

TTestResult welch_t_test(double mean_a, double var_a, double n_a,
                         double mean_b, double var_b, double n_b) {
  require(n_a >= 2.0 && n_b >= 2.0, ErrorKind::insufficient_data,
          "welch_t_test: each sample needs at least two values");
  var_a = std::max(var_a, 0.0);
  var_b = std::max(var_b, 0.0);
  TTestResult out;
  const double se_a = var_a / n_a;
  const double se_b = var_b / n_b;
  const double se2 = se_a + se_b;
  const double diff = mean_a - mean_b;
  if (se2 == 0.0) {
    out.degrees_of_freedom = n_a + n_b - 2.0;
    if (diff == 0.0) {
      out.t_statistic = 0.0;
      out.p_value = 1.0;
    } else {
      out.t_statistic = std::copysign(std::numeric_limits<double>::infinity(), diff);
      out.p_value = 0.0;
    }
    return out;
  }
  out.t_statistic = diff / std::sqrt(se2);
  out.degrees_of_freedom =
      se2 * se2 / (se_a * se_a / (n_a - 1.0) + se_b * se_b / (n_b - 1.0));
  out.p_value = student_t_two_sided(out.t_statistic, out.degrees_of_freedom);
  return out;
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  require(a.size() >= 2 && b.size() >= 2, ErrorKind::insufficient_data,
          "welch_t_test: each sample needs at least two values");
  for (double x : a) require(std::isfinite(x), ErrorKind::validation, "welch_t_test: non-finite value");
  for (double x : b) require(std::isfinite(x), ErrorKind::validation, "welch_t_test: non-finite value");
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  return welch_t_test(ma, variance_of(a, ma), static_cast<double>(a.size()),
                      mb, variance_of(b, mb), static_cast<double>(b.size()));
}

double bonferroni_adjust(double p, double count) {
  return std::min(1.0, count * p);
}

double bonferroni_combine(std::span<const double> pvals) {
  require(!pvals.empty(), ErrorKind::validation, "bonferroni_combine: empty list");
  double lo = 1.0;
  for (double p : pvals) {
    require(p >= 0.0 && p <= 1.0, ErrorKind::validation, "bonferroni_combine: p outside [0, 1]");
    lo = std::min(lo, p);
  }
  return bonferroni_adjust(lo, static_cast<double>(pvals.size()));
}

}  // namespace invarbin
