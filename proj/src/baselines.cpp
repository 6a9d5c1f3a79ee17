#include "invarbin/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iterator>

#include "invarbin/bimp.hpp"
#include "invarbin/error.hpp"
#include "invarbin/parallel.hpp"
#include "invarbin/stats.hpp"

namespace invarbin {

LogisticModel fit_lr_baseline(const MultiEnvDataset& d, const LogisticOptions& options) {
  const MultiEnvDataset train = training_rows(d);
  IndexList all(static_cast<std::size_t>(d.cols()));
  for (int c = 0; c < d.cols(); ++c) all[static_cast<std::size_t>(c)] = c;
  return fit_logistic(train.features(), train.response().cast<double>(), options, all);
}

Vector deviance_residuals(const VectorRef& y, const VectorRef& p) {
  Vector r(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double q = y[i] == 1.0 ? p[i] : 1.0 - p[i];
    const double dev = std::sqrt(std::max(0.0, -2.0 * std::log(std::max(q, 1e-300))));
    r[i] = y[i] == 1.0 ? dev : -dev;
  }
  return r;
}

Vector pearson_residuals(const VectorRef& y, const VectorRef& p) {
  Vector r(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double q = std::clamp(p[i], 1e-12, 1.0 - 1e-12);
    r[i] = (y[i] - q) / std::sqrt(q * (1.0 - q));
  }
  return r;
}

namespace {

void subsets_upto(int groups, int cap, std::vector<std::vector<int>>& out) {
  std::vector<int> current;
  std::function<void(int, int)> rec = [&](int start, int size) {
    if (static_cast<int>(current.size()) == size) {
      out.push_back(current);
      return;
    }
    for (int g = start; g < groups; ++g) {
      current.push_back(g);
      rec(g + 1, size);
      current.pop_back();
    }
  };
  for (int size = 0; size <= cap; ++size) rec(0, size);
}

}  // namespace

IcpResult fit_icp(const MultiEnvDataset& d, const IcpOptions& options) {
  require(options.alpha > 0.0 && options.alpha <= 1.0, ErrorKind::validation, "alpha must lie in (0, 1]");
  const IndexList envs = d.envs_with_role(EnvRole::train);
  require(envs.size() >= 2, ErrorKind::validation, "ICP needs at least two training environments");
  const MultiEnvDataset train = training_rows(d);
  const Vector y = train.response().cast<double>();

  int cap = options.max_subset_size < 0 ? default_subset_cap(d.group_count()) : options.max_subset_size;
  cap = std::min(cap, d.group_count());
  std::vector<std::vector<int>> subsets;
  subsets_upto(d.group_count(), cap, subsets);

  std::vector<IndexList> env_rows;
  for (int e : envs) env_rows.push_back(train.rows_in_env(e));

  IcpResult result;
  result.alpha = options.alpha;
  result.residual = options.residual;
  result.tested.resize(subsets.size());
  parallel_for(
      subsets.size(),
      [&](std::size_t s) {
        IcpSetResult& set = result.tested[s];
        set.groups = subsets[s];
        for (int g : subsets[s])
          for (int c : d.group_columns(g)) set.columns.push_back(c);
        std::sort(set.columns.begin(), set.columns.end());
        IndexList all_rows(static_cast<std::size_t>(train.rows()));
        for (int r = 0; r < train.rows(); ++r) all_rows[static_cast<std::size_t>(r)] = r;
        const Matrix xs = gather(train.features(), all_rows, set.columns);
        const LogisticModel model = fit_logistic(xs, y, options.logistic, set.columns);
        const Vector prob = model.predict_proba(xs);
        const Vector resid = options.residual == IcpResidual::pearson ? pearson_residuals(y, prob)
                                                                      : deviance_residuals(y, prob);
        std::vector<char> in_env(static_cast<std::size_t>(train.rows()));
        double min_adj = 1.0;
        for (const IndexList& rows : env_rows) {
          std::fill(in_env.begin(), in_env.end(), 0);
          for (int r : rows) in_env[static_cast<std::size_t>(r)] = 1;
          std::vector<double> a, b;
          for (int r = 0; r < train.rows(); ++r) (in_env[static_cast<std::size_t>(r)] ? a : b).push_back(resid[r]);
          double p = 0.0;
          if (a.size() >= 2 && b.size() >= 2) p = welch_t_test(a, b).p_value;
          min_adj = std::min(min_adj, bonferroni_adjust(p, static_cast<double>(envs.size())));
        }
        set.p_value = min_adj;
        set.accepted = min_adj > options.alpha;
      },
      options.threads);

  bool first = true;
  for (const IcpSetResult& set : result.tested) {
    if (!set.accepted) continue;
    result.accepted_sets.push_back(set.columns);
    if (first) {
      result.intersection = set.columns;
      first = false;
    } else {
      IndexList both;
      std::set_intersection(result.intersection.begin(), result.intersection.end(), set.columns.begin(),
                            set.columns.end(), std::back_inserter(both));
      result.intersection = std::move(both);
    }
  }
  if (!result.accepted_sets.empty() && !result.intersection.empty()) {
    IndexList all_rows(static_cast<std::size_t>(train.rows()));
    for (int r = 0; r < train.rows(); ++r) all_rows[static_cast<std::size_t>(r)] = r;
    result.model = fit_logistic(gather(train.features(), all_rows, result.intersection), y, options.logistic,
                                result.intersection);
  }
  return result;
}

Eigen::VectorXi predict_labels(const LogisticModel& model, const MatrixRef& x) {
  const Vector p = model.predict_proba(x);
  Eigen::VectorXi labels(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) labels[i] = p[i] >= 0.5 ? 1 : 0;
  return labels;
}

std::optional<Eigen::VectorXi> predict_baseline(const LogisticModel& model, const MatrixRef& x) {
  return predict_labels(model, x);
}

std::optional<Eigen::VectorXi> predict_baseline(const IcpResult& icp, const MatrixRef& x) {
  if (icp.abstained()) return std::nullopt;
  const LogisticModel& model = *icp.model;
  Matrix xs(x.rows(), static_cast<Eigen::Index>(model.columns.size()));
  for (std::size_t j = 0; j < model.columns.size(); ++j) xs.col(static_cast<Eigen::Index>(j)) = x.col(model.columns[j]);
  return predict_labels(model, xs);
}

}  // namespace invarbin
