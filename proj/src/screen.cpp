#include <algorithm>
#include <cmath>

#include "invarbin/error.hpp"
#include "invarbin/invariance.hpp"
#include "invarbin/stats.hpp"

namespace invarbin {

// Sufficient statistics of one class: per training environment, the row
// count, column sums and cross products of the data shifted by the pooled
// class means. Shifting keeps the residual sums of squares well conditioned.
struct InvarianceScreen::Impl {
  struct Cell {
    double n = 0.0;
    Vector sum;
    Matrix gram;
  };
  struct ClassStats {
    std::vector<Cell> cells;  // one per training environment
    Cell pooled;
  };

  InvarianceOptions options;
  IndexList envs;
  std::array<ClassStats, 2> by_class;
  bool short_cell = false;
  int cols = 0;
};

InvarianceScreen::InvarianceScreen(const MultiEnvDataset& d, InvarianceOptions options)
    : impl_(std::make_unique<Impl>()) {
  require(options.regressor == Regressor::ols, ErrorKind::validation, "InvarianceScreen supports OLS only");
  require(options.alpha > 0.0 && options.alpha <= 1.0, ErrorKind::validation, "alpha must lie in (0, 1]");
  impl_->options = options;
  impl_->envs = d.envs_with_role(EnvRole::train);
  impl_->cols = d.cols();
  require(impl_->envs.size() >= 2, ErrorKind::validation,
          "invariance test needs at least two training environments");

  std::vector<int> slot(static_cast<std::size_t>(d.env_count()), -1);
  for (std::size_t s = 0; s < impl_->envs.size(); ++s) slot[static_cast<std::size_t>(impl_->envs[s])] = static_cast<int>(s);

  const Eigen::Index m = d.cols();
  for (int y = 0; y < 2; ++y) {
    std::vector<IndexList> rows(impl_->envs.size());
    IndexList all;
    for (int r = 0; r < d.rows(); ++r) {
      const int s = slot[static_cast<std::size_t>(d.env_of()[static_cast<std::size_t>(r)])];
      if (s < 0 || d.response()[r] != y) continue;
      rows[static_cast<std::size_t>(s)].push_back(r);
      all.push_back(r);
    }
    Impl::ClassStats& cs = impl_->by_class[static_cast<std::size_t>(y)];
    cs.pooled.n = static_cast<double>(all.size());
    cs.pooled.sum = Vector::Zero(m);
    cs.pooled.gram = Matrix::Zero(m, m);
    Eigen::RowVectorXd shift = Eigen::RowVectorXd::Zero(m);
    if (!all.empty()) {
      for (int r : all) shift += d.features().row(r);
      shift /= static_cast<double>(all.size());
    }
    for (const IndexList& env_rows : rows) {
      const auto n_e = static_cast<double>(env_rows.size());
      const double n_rest = cs.pooled.n - n_e;
      if (n_e < 2.0 || n_rest < 2.0) impl_->short_cell = true;
      Matrix block(static_cast<Eigen::Index>(env_rows.size()), m);
      for (std::size_t i = 0; i < env_rows.size(); ++i)
        block.row(static_cast<Eigen::Index>(i)) = d.features().row(env_rows[i]) - shift;
      Impl::Cell cell;
      cell.n = n_e;
      cell.sum = block.colwise().sum().transpose();
      cell.gram = Matrix::Zero(m, m);
      cell.gram.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
      cell.gram = cell.gram.selfadjointView<Eigen::Lower>();
      cs.pooled.sum += cell.sum;
      cs.pooled.gram += cell.gram;
      cs.cells.push_back(std::move(cell));
    }
  }
}

InvarianceScreen::~InvarianceScreen() = default;
InvarianceScreen::InvarianceScreen(InvarianceScreen&&) noexcept = default;
InvarianceScreen& InvarianceScreen::operator=(InvarianceScreen&&) noexcept = default;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double n = 0.0;
};

Moments moments(double n, double sum, double sum_sq) {
  Moments mo;
  mo.n = n;
  mo.mean = sum / n;
  mo.var = std::max(0.0, (sum_sq - sum * mo.mean) / (n - 1.0));
  return mo;
}

}  // namespace

InvarianceReport InvarianceScreen::test(const Pair& pair) const {
  const Impl& im = *impl_;
  require(pair.target >= 0 && pair.target < im.cols, ErrorKind::validation, "pair target out of range");
  for (int c : pair.conditioning)
    require(c >= 0 && c < im.cols && c != pair.target, ErrorKind::validation, "pair conditioning set invalid");

  InvarianceReport report;
  report.pair = pair;
  report.alpha = im.options.alpha;
  if (im.short_cell) {
    report.verdict = Verdict::skipped;
    report.reason = "insufficient class samples";
    return report;
  }

  const auto p = static_cast<Eigen::Index>(pair.conditioning.size());
  const int k = pair.target;
  const std::size_t n_env = im.envs.size();
  const double tests = static_cast<double>(n_env) * (im.options.scope == BonferroniScope::env ? 1.0 : 2.0);

  for (int y = 0; y < 2; ++y) {
    const Impl::ClassStats& cs = im.by_class[static_cast<std::size_t>(y)];
    const Impl::Cell& P = cs.pooled;
    const double n = P.n;

    // Centred cross products of the conditioning block and the target.
    Matrix css(p, p);
    Vector csk(p);
    Vector ss(p);
    for (Eigen::Index a = 0; a < p; ++a) {
      const int ca = pair.conditioning[static_cast<std::size_t>(a)];
      ss[a] = P.sum[ca];
      csk[a] = P.gram(ca, k) - P.sum[ca] * P.sum[k] / n;
      for (Eigen::Index b = 0; b <= a; ++b) {
        const int cb = pair.conditioning[static_cast<std::size_t>(b)];
        css(a, b) = css(b, a) = P.gram(ca, cb) - P.sum[ca] * P.sum[cb] / n;
      }
    }

    // Minimum-norm slopes in unit-scaled coordinates, as fit_ols does.
    Vector beta = Vector::Zero(p);
    if (p > 0) {
      Vector inv_scale(p);
      double max_diag = css.diagonal().maxCoeff();
      for (Eigen::Index a = 0; a < p; ++a)
        inv_scale[a] = css(a, a) > 1e-24 * std::max(1.0, max_diag) ? 1.0 / std::sqrt(css(a, a)) : 0.0;
      const Matrix scaled = inv_scale.asDiagonal() * css * inv_scale.asDiagonal();
      Eigen::SelfAdjointEigenSolver<Matrix> eig(scaled);
      const Vector& lam = eig.eigenvalues();
      const double cut = 1e-14 * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
      const Vector rhs = eig.eigenvectors().transpose() * (inv_scale.asDiagonal() * csk);
      Vector coef = Vector::Zero(p);
      for (Eigen::Index j = 0; j < p; ++j)
        if (lam[j] > cut) coef[j] = rhs[j] / lam[j];
      beta = inv_scale.asDiagonal() * (eig.eigenvectors() * coef);
    }
    const double intercept = (P.sum[k] - beta.dot(ss)) / n;

    auto residual_sums = [&](const Impl::Cell& c, double& sum_r, double& sum_r2) {
      Vector s_s(p);
      Vector g_sk(p);
      Matrix g_ss(p, p);
      for (Eigen::Index a = 0; a < p; ++a) {
        const int ca = pair.conditioning[static_cast<std::size_t>(a)];
        s_s[a] = c.sum[ca];
        g_sk[a] = c.gram(ca, k);
        for (Eigen::Index b = 0; b < p; ++b) g_ss(a, b) = c.gram(ca, pair.conditioning[static_cast<std::size_t>(b)]);
      }
      const double bs = beta.dot(s_s);
      sum_r = c.sum[k] - intercept * c.n - bs;
      sum_r2 = c.gram(k, k) + c.n * intercept * intercept + beta.dot(g_ss * beta) - 2.0 * intercept * c.sum[k] -
               2.0 * beta.dot(g_sk) + 2.0 * intercept * bs;
    };

    double pooled_r = 0.0, pooled_r2 = 0.0;
    residual_sums(P, pooled_r, pooled_r2);
    const double spread = std::max((P.gram(k, k) - P.sum[k] * P.sum[k] / n) / (n - 1.0), 0.0);

    double min_adj = 1.0;
    for (std::size_t s = 0; s < n_env; ++s) {
      const Impl::Cell& c = cs.cells[s];
      double in_r = 0.0, in_r2 = 0.0;
      residual_sums(c, in_r, in_r2);
      const Moments a = moments(c.n, in_r, in_r2);
      const Moments b = moments(n - c.n, pooled_r - in_r, pooled_r2 - in_r2);
      const TTestResult t = residual_welch(a.mean, a.var, a.n, b.mean, b.var, b.n, spread);
      CellPValue cell;
      cell.env = im.envs[s];
      cell.cls = y;
      cell.t_statistic = t.t_statistic;
      cell.raw = t.p_value;
      cell.adjusted = bonferroni_adjust(t.p_value, tests);
      min_adj = std::min(min_adj, cell.adjusted);
      report.cells.push_back(cell);
    }
    report.min_adjusted[static_cast<std::size_t>(y)] = min_adj;
  }
  report.verdict = decide(report.min_adjusted, im.options.alpha);
  return report;
}

}  // namespace invarbin
