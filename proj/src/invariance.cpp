#include "invarbin/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "invarbin/error.hpp"
#include "invarbin/stats.hpp"

namespace invarbin {

std::string to_string(const Pair& pair, const std::vector<std::string>& names) {
  auto name = [&](int c) {
    return c >= 0 && static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)]
                                                                 : "X" + std::to_string(c + 1);
  };
  std::ostringstream out;
  out << '(' << name(pair.target) << ", {";
  for (std::size_t i = 0; i < pair.conditioning.size(); ++i) {
    if (i) out << ", ";
    out << name(pair.conditioning[i]);
  }
  out << "})";
  return out.str();
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::accepted: return "accepted";
    case Verdict::rejected: return "rejected";
    case Verdict::skipped: return "skipped";
  }
  return "skipped";
}

std::string_view to_string(BonferroniScope s) {
  return s == BonferroniScope::env ? "env" : "env-and-class";
}

BonferroniScope bonferroni_scope_from_string(std::string_view text) {
  if (text == "env") return BonferroniScope::env;
  if (text == "env-and-class") return BonferroniScope::env_and_class;
  fail(ErrorKind::validation, "unknown Bonferroni scope '" + std::string(text) + "'");
}

Verdict decide(const std::array<double, 2>& min_adjusted, double alpha) {
  return min_adjusted[0] > alpha && min_adjusted[1] > alpha ? Verdict::accepted : Verdict::rejected;
}

TTestResult residual_welch(double mean_a, double var_a, double n_a, double mean_b, double var_b, double n_b,
                           double spread) {
  const double var_floor = 1e-12 * spread;
  if (var_a <= var_floor) var_a = 0.0;
  if (var_b <= var_floor) var_b = 0.0;
  if (var_a == 0.0 && var_b == 0.0 && std::abs(mean_a - mean_b) <= 1e-9 * std::sqrt(spread)) mean_b = mean_a;
  return welch_t_test(mean_a, var_a, n_a, mean_b, var_b, n_b);
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

void validate_pair(const MultiEnvDataset& d, const Pair& pair) {
  require(pair.target >= 0 && pair.target < d.cols(), ErrorKind::validation, "pair target out of range");
  for (std::size_t i = 0; i < pair.conditioning.size(); ++i) {
    const int c = pair.conditioning[i];
    require(c >= 0 && c < d.cols() && c != pair.target, ErrorKind::validation,
            "pair conditioning set invalid");
    require(i == 0 || pair.conditioning[i - 1] < c, ErrorKind::validation,
            "pair conditioning set must be sorted and distinct");
  }
}

}  // namespace

InvarianceReport residual_distribution_test(const MultiEnvDataset& d, const Pair& pair,
                                            const InvarianceOptions& options) {
  validate_pair(d, pair);
  require(options.alpha > 0.0 && options.alpha <= 1.0, ErrorKind::validation, "alpha must lie in (0, 1]");
  const IndexList envs = d.envs_with_role(EnvRole::train);
  require(envs.size() >= 2, ErrorKind::validation, "invariance test needs at least two training environments");

  InvarianceReport report;
  report.pair = pair;
  report.alpha = options.alpha;

  // Row lists per (class, environment slot).
  std::vector<int> slot(static_cast<std::size_t>(d.env_count()), -1);
  for (std::size_t s = 0; s < envs.size(); ++s) slot[static_cast<std::size_t>(envs[s])] = static_cast<int>(s);
  std::array<IndexList, 2> class_rows;
  std::array<std::vector<int>, 2> class_slot;
  for (int r = 0; r < d.rows(); ++r) {
    const int s = slot[static_cast<std::size_t>(d.env_of()[static_cast<std::size_t>(r)])];
    if (s < 0) continue;
    const int y = d.response()[r];
    class_rows[static_cast<std::size_t>(y)].push_back(r);
    class_slot[static_cast<std::size_t>(y)].push_back(s);
  }

  const double tests = static_cast<double>(envs.size()) * (options.scope == BonferroniScope::env ? 1.0 : 2.0);
  for (int y = 0; y < 2; ++y) {
    std::vector<int> counts(envs.size(), 0);
    for (int s : class_slot[static_cast<std::size_t>(y)]) ++counts[static_cast<std::size_t>(s)];
    const int total = static_cast<int>(class_rows[static_cast<std::size_t>(y)].size());
    for (int c : counts) {
      if (c < 2 || total - c < 2) {
        report.cells.clear();
        report.verdict = Verdict::skipped;
        report.reason = "insufficient class samples";
        return report;
      }
    }
  }

  for (int y = 0; y < 2; ++y) {
    const IndexList& rows = class_rows[static_cast<std::size_t>(y)];
    const Matrix xs = gather(d.features(), rows, pair.conditioning);
    const Vector xk = gather(d.features(), rows, pair.target);
    Vector fitted;
    if (options.regressor == Regressor::ols) {
      fitted = fit_ols(xs, xk).predict(xs);
    } else {
      fitted = fit_spline_additive(xs, xk, options.spline).predict(xs);
    }
    const Vector resid = xk - fitted;
    const double xk_mean = xk.mean();
    const double spread = (xk.array() - xk_mean).square().sum() / static_cast<double>(xk.size() - 1);

    double min_adj = 1.0;
    for (std::size_t s = 0; s < envs.size(); ++s) {
      std::vector<double> in, out;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        (class_slot[static_cast<std::size_t>(y)][i] == static_cast<int>(s) ? in : out)
            .push_back(resid[static_cast<Eigen::Index>(i)]);
      }
      const double mi = mean_of(in), mo = mean_of(out);
      const TTestResult t = residual_welch(mi, var_of(in, mi), static_cast<double>(in.size()), mo, var_of(out, mo),
                                           static_cast<double>(out.size()), spread);
      CellPValue cell;
      cell.env = envs[s];
      cell.cls = y;
      cell.t_statistic = t.t_statistic;
      cell.raw = t.p_value;
      cell.adjusted = bonferroni_adjust(t.p_value, tests);
      min_adj = std::min(min_adj, cell.adjusted);
      report.cells.push_back(cell);
    }
    report.min_adjusted[static_cast<std::size_t>(y)] = min_adj;
  }
  report.verdict = decide(report.min_adjusted, options.alpha);
  return report;
}

}  // namespace invarbin
