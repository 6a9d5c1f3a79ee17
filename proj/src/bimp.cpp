#include "invarbin/bimp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "invarbin/error.hpp"
#include "invarbin/parallel.hpp"

namespace invarbin {

std::string_view to_string(Variant v) { return v == Variant::linear ? "linear" : "gam"; }

Variant variant_from_string(std::string_view text) {
  if (text == "linear") return Variant::linear;
  if (text == "gam") return Variant::gam;
  fail(ErrorKind::validation, "unknown variant '" + std::string(text) + "'");
}

std::optional<double> bimp_ratio(double marginal, double h0, double h1, double eps_den) {
  require(std::isfinite(marginal) && std::isfinite(h0) && std::isfinite(h1) && std::isfinite(eps_den),
          ErrorKind::validation, "bimp_ratio: non-finite input");
  const double den = h1 - h0;
  if (std::abs(den) <= eps_den) return std::nullopt;
  return std::clamp((marginal - h0) / den, 0.0, 1.0);
}

int default_subset_cap(int groups) { return std::max(0, std::min(groups - 1, 3)); }

namespace {

// Subsets of `pool` of size `size`, lexicographic, appended to `out`.
void combinations(const std::vector<int>& pool, int size, std::vector<int>& current, std::size_t start,
                  std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == size) {
    out.push_back(current);
    return;
  }
  for (std::size_t i = start; i < pool.size(); ++i) {
    current.push_back(pool[i]);
    combinations(pool, size, current, i + 1, out);
    current.pop_back();
  }
}

std::vector<Pair> enumerate_grouped(const std::vector<int>& column_group, int groups, int cap) {
  if (cap < 0) cap = default_subset_cap(groups);
  cap = std::min(cap, groups - 1);
  std::vector<IndexList> members(static_cast<std::size_t>(groups));
  for (std::size_t c = 0; c < column_group.size(); ++c)
    members[static_cast<std::size_t>(column_group[c])].push_back(static_cast<int>(c));

  std::vector<Pair> pairs;
  for (std::size_t k = 0; k < column_group.size(); ++k) {
    std::vector<int> pool;
    for (int g = 0; g < groups; ++g)
      if (g != column_group[k]) pool.push_back(g);
    for (int size = 0; size <= cap; ++size) {
      std::vector<std::vector<int>> subsets;
      std::vector<int> current;
      combinations(pool, size, current, 0, subsets);
      for (const auto& subset : subsets) {
        Pair pair;
        pair.target = static_cast<int>(k);
        for (int g : subset)
          for (int c : members[static_cast<std::size_t>(g)]) pair.conditioning.push_back(c);
        std::sort(pair.conditioning.begin(), pair.conditioning.end());
        pairs.push_back(std::move(pair));
      }
    }
  }
  return pairs;
}

}  // namespace

std::vector<Pair> enumerate_pairs(const MultiEnvDataset& d, int max_subset_size) {
  require(d.cols() >= 2, ErrorKind::validation, "enumerate_pairs: need at least two columns");
  return enumerate_grouped(d.column_group(), d.group_count(), max_subset_size);
}

std::vector<Pair> enumerate_pairs(int m, int max_subset_size) {
  require(m >= 2, ErrorKind::validation, "enumerate_pairs: need m >= 2");
  std::vector<int> groups(static_cast<std::size_t>(m));
  for (int c = 0; c < m; ++c) groups[static_cast<std::size_t>(c)] = c;
  return enumerate_grouped(groups, m, max_subset_size);
}

Vector predict(const MarginalModel& model, const MatrixRef& x) {
  return std::visit([&](const auto& m) { return m.predict(x); }, model);
}

MarginalModel fit_marginal(const MatrixRef& xs, const VectorRef& xk, Variant variant, const SplineOptions& spline) {
  if (variant == Variant::linear) return fit_ols(xs, xk);
  return fit_spline_additive(xs, xk, spline);
}

namespace {

Matrix columns_of(const MatrixRef& x, const IndexList& cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = x.col(cols[j]);
  return out;
}

}  // namespace

PairModel fit_pair_model(const MultiEnvDataset& d_train, const MatrixRef& target_features, const Pair& pair,
                         Variant variant, double eps_den_rel, const SplineOptions& spline) {
  require(target_features.cols() == d_train.cols(), ErrorKind::validation,
          "fit_pair_model: target features have the wrong column count");
  require(eps_den_rel > 0.0, ErrorKind::validation, "fit_pair_model: eps_den must be positive");
  const MultiEnvDataset pooled = training_rows(d_train);
  std::array<IndexList, 2> rows;
  for (int r = 0; r < pooled.rows(); ++r) rows[static_cast<std::size_t>(pooled.response()[r])].push_back(r);
  require(rows[0].size() >= 2 && rows[1].size() >= 2, ErrorKind::degenerate_response,
          "fit_pair_model: each class needs at least two training rows");

  PairModel model;
  model.pair = pair;
  model.variant = variant;
  model.h0 = fit_ols(gather(pooled.features(), rows[0], pair.conditioning),
                     gather(pooled.features(), rows[0], pair.target), pair.conditioning);
  model.h1 = fit_ols(gather(pooled.features(), rows[1], pair.conditioning),
                     gather(pooled.features(), rows[1], pair.target), pair.conditioning);
  const Vector xk = pooled.features().col(pair.target);
  const double sd = std::sqrt((xk.array() - xk.mean()).square().sum() / static_cast<double>(xk.size() - 1));
  model.eps_den = eps_den_rel * std::max(sd, 1e-300);
  model.marginal = fit_marginal(columns_of(target_features, pair.conditioning), target_features.col(pair.target),
                                variant, spline);
  return model;
}

PairPrediction predict_pair(const PairModel& model, const MatrixRef& x) {
  const Matrix xs = columns_of(x, model.pair.conditioning);
  const Vector h0 = model.h0.predict(xs);
  const Vector h1 = model.h1.predict(xs);
  const Vector ell = predict(model.marginal, xs);
  PairPrediction out;
  out.values = Vector::Zero(x.rows());
  out.degenerate.assign(static_cast<std::size_t>(x.rows()), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto r = bimp_ratio(ell[i], h0[i], h1[i], model.eps_den);
    if (r) {
      out.values[i] = *r;
    } else {
      out.degenerate[static_cast<std::size_t>(i)] = 1;
      ++out.degenerate_count;
    }
  }
  if (x.rows() > 0 && out.degenerate_count == x.rows())
    fail(ErrorKind::degenerate_pair, "predict_pair: every row is degenerate for " + to_string(model.pair));
  return out;
}

std::vector<std::size_t> score_filter(const std::vector<double>& scores, double tau) {
  std::vector<std::size_t> kept;
  if (scores.empty()) return kept;
  const auto best = static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin());
  const double threshold = (1.0 + tau) * scores[best];
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (i == best || scores[i] <= threshold) kept.push_back(i);
  return kept;
}

namespace {

// Squared error of one environment's rows given a marginal fitted there.
double env_sse(const PairModel& model, MarginalModel marginal, const Matrix& xe, const Eigen::VectorXi& ye,
               double base_rate) {
  PairModel local = model;
  local.marginal = std::move(marginal);
  Vector pred = Vector::Constant(xe.rows(), base_rate);
  try {
    const PairPrediction p = predict_pair(local, xe);
    for (Eigen::Index i = 0; i < xe.rows(); ++i)
      if (!p.degenerate[static_cast<std::size_t>(i)]) pred[i] = p.values[i];
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::degenerate_pair) throw;
  }
  return (pred - ye.cast<double>()).squaredNorm();
}

struct EnvBlock {
  Matrix x;
  Eigen::VectorXi y;
};

std::vector<EnvBlock> training_blocks(const MultiEnvDataset& d) {
  std::vector<EnvBlock> blocks;
  for (int e : d.envs_with_role(EnvRole::train)) {
    const IndexList rows = d.rows_in_env(e);
    if (rows.empty()) continue;
    EnvBlock b{Matrix(static_cast<Eigen::Index>(rows.size()), d.cols()),
               Eigen::VectorXi(static_cast<Eigen::Index>(rows.size()))};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      b.x.row(static_cast<Eigen::Index>(i)) = d.features().row(rows[i]);
      b.y[static_cast<Eigen::Index>(i)] = d.response()[rows[i]];
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

}  // namespace

double pair_score(const MultiEnvDataset& d, const PairModel& model, double base_rate, const SplineOptions& spline) {
  double sse = 0.0;
  Eigen::Index count = 0;
  for (const EnvBlock& b : training_blocks(d)) {
    sse += env_sse(model,
                   fit_marginal(columns_of(b.x, model.pair.conditioning), b.x.col(model.pair.target), model.variant,
                                spline),
                   b.x, b.y, base_rate);
    count += b.x.rows();
  }
  require(count > 0, ErrorKind::insufficient_data, "pair_score: no training rows");
  return sse / static_cast<double>(count);
}

namespace {

constexpr double kEigenCutoff = 1e-14;

// Centred cross products of one row set over every column.
struct RowSetStats {
  Eigen::Index n = 0;
  Eigen::RowVectorXd mean;
  Matrix cross;
};

RowSetStats row_set_stats(const Matrix& x) {
  RowSetStats st;
  st.n = x.rows();
  st.mean = x.colwise().mean();
  const Matrix xc = x.rowwise() - st.mean;
  st.cross = Matrix::Zero(x.cols(), x.cols());
  st.cross.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
  st.cross = st.cross.selfadjointView<Eigen::Lower>();
  return st;
}

// Minimum-norm least squares in unit-scaled coordinates, as fit_ols.
LinearModel ols_from_stats(const RowSetStats& st, const IndexList& cols, int target) {
  const auto p = static_cast<Eigen::Index>(cols.size());
  LinearModel model;
  model.columns = cols;
  model.coefficients = Vector::Zero(p + 1);
  model.coefficients[0] = st.mean[target];
  if (p == 0) return model;
  const auto n = static_cast<double>(st.n);
  Vector scale(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const int c = cols[static_cast<std::size_t>(j)];
    scale[j] = std::sqrt(std::max(st.cross(c, c), 0.0) / n);
    if (!(scale[j] > 1e-12 * (1.0 + std::abs(st.mean[c])))) scale[j] = 0.0;
  }
  Matrix a = Matrix::Zero(p, p);
  Vector b = Vector::Zero(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    if (scale[i] == 0.0) continue;
    const int ci = cols[static_cast<std::size_t>(i)];
    b[i] = st.cross(ci, target) / scale[i];
    for (Eigen::Index j = 0; j < p; ++j)
      if (scale[j] != 0.0) a(i, j) = st.cross(ci, cols[static_cast<std::size_t>(j)]) / (scale[i] * scale[j]);
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const double cutoff = kEigenCutoff * std::max(eig.eigenvalues().maxCoeff(), 0.0);
  Vector beta = Vector::Zero(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double lam = eig.eigenvalues()[k];
    if (lam > cutoff) beta += eig.eigenvectors().col(k) * (eig.eigenvectors().col(k).dot(b) / lam);
  }
  double intercept = st.mean[target];
  for (Eigen::Index j = 0; j < p; ++j) {
    beta[j] = scale[j] > 0.0 ? beta[j] / scale[j] : 0.0;
    intercept -= st.mean[cols[static_cast<std::size_t>(j)]] * beta[j];
  }
  model.coefficients[0] = intercept;
  model.coefficients.tail(p) = beta;
  return model;
}

// Scaled centred spline basis of every column over one row set, with its
// cross products against itself and the centred columns.
struct BasisStats {
  std::vector<AdditiveTerm> terms;
  std::vector<int> offset;
  Eigen::RowVectorXd b_mean;
  Vector b_scale;
  Matrix zz;
  Matrix zx;
  Eigen::RowVectorXd x_mean;
};

BasisStats basis_stats(const Matrix& x, const SplineOptions& spline) {
  BasisStats st;
  int total = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    st.terms.push_back(make_additive_term(x.col(j), spline.knots_per_feature));
    st.offset.push_back(total);
    total += st.terms.back().basis_size();
  }
  Matrix basis(x.rows(), total);
  Eigen::RowVectorXd row(total);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      st.terms[static_cast<std::size_t>(j)].basis(x(i, j), row.data() + st.offset[static_cast<std::size_t>(j)]);
    basis.row(i) = row;
  }
  const auto n = static_cast<double>(x.rows());
  st.b_mean = basis.colwise().mean();
  basis.rowwise() -= st.b_mean;
  st.b_scale = (basis.colwise().squaredNorm() / n).cwiseSqrt().transpose();
  for (int c = 0; c < total; ++c) {
    if (!(st.b_scale[c] > 0.0)) st.b_scale[c] = 0.0;
    basis.col(c) *= st.b_scale[c] > 0.0 ? 1.0 / st.b_scale[c] : 0.0;
  }
  st.x_mean = x.colwise().mean();
  st.zz = Matrix::Zero(total, total);
  st.zz.selfadjointView<Eigen::Lower>().rankUpdate(basis.transpose());
  st.zz = st.zz.selfadjointView<Eigen::Lower>();
  st.zx = basis.transpose() * (x.rowwise() - st.x_mean);
  return st;
}

// Ridge solve on the selected columns' basis blocks, as fit_spline_additive.
AdditiveSplineModel spline_from_stats(const BasisStats& st, const IndexList& cols, int target, double lambda) {
  AdditiveSplineModel model;
  model.lambda = lambda;
  model.columns = cols;
  std::vector<int> index;
  for (int c : cols) {
    const AdditiveTerm& t = st.terms[static_cast<std::size_t>(c)];
    model.terms.push_back(t);
    for (int b = 0; b < t.basis_size(); ++b) index.push_back(st.offset[static_cast<std::size_t>(c)] + b);
  }
  model.intercept = st.x_mean[target];
  const auto total = static_cast<Eigen::Index>(index.size());
  if (total == 0) return model;
  Matrix gram = Matrix::Identity(total, total) * lambda;
  Vector rhs(total);
  for (Eigen::Index i = 0; i < total; ++i) {
    rhs[i] = st.zx(index[static_cast<std::size_t>(i)], target);
    for (Eigen::Index j = 0; j < total; ++j)
      gram(i, j) += st.zz(index[static_cast<std::size_t>(i)], index[static_cast<std::size_t>(j)]);
  }
  const Vector theta_scaled = gram.ldlt().solve(rhs);
  Vector theta(total);
  for (Eigen::Index i = 0; i < total; ++i) {
    const double s = st.b_scale[index[static_cast<std::size_t>(i)]];
    theta[i] = s > 0.0 ? theta_scaled[i] / s : 0.0;
    model.intercept -= st.b_mean[index[static_cast<std::size_t>(i)]] * theta[i];
  }
  Eigen::Index offset = 0;
  for (AdditiveTerm& t : model.terms) {
    t.coefficients = theta.segment(offset, t.basis_size());
    offset += t.basis_size();
  }
  return model;
}

// Statistics shared by every pair of one fit_bimp call.
class FitCache {
 public:
  FitCache(const MultiEnvDataset& train, const Matrix& x_test, Variant variant, const SplineOptions& spline)
      : variant_(variant), spline_(spline), blocks_(training_blocks(train)) {
    std::array<IndexList, 2> rows;
    for (int r = 0; r < train.rows(); ++r) rows[static_cast<std::size_t>(train.response()[r])].push_back(r);
    require(rows[0].size() >= 2 && rows[1].size() >= 2, ErrorKind::degenerate_response,
            "fit_pair_model: each class needs at least two training rows");
    IndexList all(static_cast<std::size_t>(train.cols()));
    for (int c = 0; c < train.cols(); ++c) all[static_cast<std::size_t>(c)] = c;
    for (int y = 0; y < 2; ++y) cls_[y] = row_set_stats(gather(train.features(), rows[static_cast<std::size_t>(y)], all));
    const Matrix& x = train.features();
    sd_ = ((x.rowwise() - x.colwise().mean()).colwise().squaredNorm() / static_cast<double>(x.rows() - 1))
              .cwiseSqrt()
              .transpose();
    if (variant == Variant::linear) {
      test_lin_ = row_set_stats(x_test);
      for (const EnvBlock& b : blocks_) env_lin_.push_back(row_set_stats(b.x));
    } else {
      test_basis_ = basis_stats(x_test, spline);
      for (const EnvBlock& b : blocks_) env_basis_.push_back(basis_stats(b.x, spline));
    }
  }

  PairModel fit(const Pair& pair, double eps_den_rel) const {
    PairModel model;
    model.pair = pair;
    model.variant = variant_;
    model.h0 = ols_from_stats(cls_[0], pair.conditioning, pair.target);
    model.h1 = ols_from_stats(cls_[1], pair.conditioning, pair.target);
    model.eps_den = eps_den_rel * std::max(sd_[pair.target], 1e-300);
    model.marginal = marginal(test_lin_, test_basis_, pair);
    return model;
  }

  double score(const PairModel& model, double base_rate) const {
    double sse = 0.0;
    Eigen::Index count = 0;
    for (std::size_t e = 0; e < blocks_.size(); ++e) {
      const MarginalModel m = variant_ == Variant::linear ? marginal(env_lin_[e], {}, model.pair)
                                                          : marginal({}, env_basis_[e], model.pair);
      sse += env_sse(model, m, blocks_[e].x, blocks_[e].y, base_rate);
      count += blocks_[e].x.rows();
    }
    require(count > 0, ErrorKind::insufficient_data, "pair_score: no training rows");
    return sse / static_cast<double>(count);
  }

 private:
  MarginalModel marginal(const RowSetStats& lin, const BasisStats& basis, const Pair& pair) const {
    if (variant_ == Variant::linear) return ols_from_stats(lin, pair.conditioning, pair.target);
    return spline_from_stats(basis, pair.conditioning, pair.target, spline_.lambda);
  }

  Variant variant_;
  SplineOptions spline_;
  std::vector<EnvBlock> blocks_;
  RowSetStats cls_[2];
  Vector sd_;
  RowSetStats test_lin_;
  std::vector<RowSetStats> env_lin_;
  BasisStats test_basis_;
  std::vector<BasisStats> env_basis_;
};

}  // namespace

EnsembleModel fit_bimp(const MultiEnvDataset& d, const BimpOptions& options) {
  require(options.tau >= 0.0, ErrorKind::validation, "tau must be nonnegative");
  require(options.eps_den > 0.0, ErrorKind::validation, "eps_den must be positive");
  const int test_env = test_env_index(d);
  require(d.envs_with_role(EnvRole::train).size() >= 2, ErrorKind::validation,
          "bIMP needs at least two training environments");
  const IndexList test_rows = d.rows_in_env(test_env);
  require(!test_rows.empty(), ErrorKind::validation, "test environment has no rows");
  Matrix x_test(static_cast<Eigen::Index>(test_rows.size()), d.cols());
  for (std::size_t i = 0; i < test_rows.size(); ++i)
    x_test.row(static_cast<Eigen::Index>(i)) = d.features().row(test_rows[i]);

  const MultiEnvDataset train = training_rows(d);
  EnsembleModel ens;
  ens.tau = options.tau;
  ens.base_rate = train.response().cast<double>().mean();

  const std::vector<Pair> pairs = enumerate_pairs(d, options.max_subset_size);
  InvarianceOptions inv;
  inv.alpha = options.alpha;
  inv.scope = options.scope;
  const InvarianceScreen screen(train, inv);
  ens.reports.resize(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) { ens.reports[i] = screen.test(pairs[i]); }, options.threads);
  ens.pairs_tested = static_cast<int>(pairs.size());

  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (ens.reports[i].verdict == Verdict::skipped) ++ens.pairs_skipped;
    if (ens.reports[i].accepted()) accepted.push_back(i);
  }
  ens.pairs_accepted = static_cast<int>(accepted.size());

  // Fit every accepted pair against the test features and score it.
  std::optional<FitCache> cache;
  if (options.sufficient_statistics && !accepted.empty() &&
      (options.variant == Variant::linear || options.spline.lambda > 0.0))
    cache.emplace(train, x_test, options.variant, options.spline);
  std::vector<std::optional<PairModel>> models(accepted.size());
  std::vector<double> scores(accepted.size(), 0.0);
  parallel_for(
      accepted.size(),
      [&](std::size_t j) {
        const Pair& pair = pairs[accepted[j]];
        PairModel model = cache ? cache->fit(pair, options.eps_den)
                                : fit_pair_model(train, x_test, pair, options.variant, options.eps_den, options.spline);
        int degenerate = static_cast<int>(test_rows.size());
        try {
          degenerate = predict_pair(model, x_test).degenerate_count;
        } catch (const Error& err) {
          if (err.kind() != ErrorKind::degenerate_pair) throw;
        }
        if (degenerate > options.max_degenerate_fraction * static_cast<double>(test_rows.size())) return;
        scores[j] = cache ? cache->score(model, ens.base_rate) : pair_score(train, model, ens.base_rate, options.spline);
        models[j] = std::move(model);
      },
      options.threads);

  std::vector<PairModel> candidates;
  for (std::size_t j = 0; j < accepted.size(); ++j) {
    if (!models[j]) {
      ++ens.pairs_degenerate;
      continue;
    }
    ens.candidates.push_back(models[j]->pair);
    ens.scores.push_back(scores[j]);
    candidates.push_back(std::move(*models[j]));
  }
  const std::vector<std::size_t> kept = score_filter(ens.scores, options.tau);
  if (!ens.scores.empty()) ens.score_threshold = (1.0 + options.tau) * *std::min_element(ens.scores.begin(), ens.scores.end());
  for (std::size_t i : kept) ens.members.push_back(std::move(candidates[i]));
  return ens;
}

BimpPrediction predict_bimp(const EnsembleModel& ens, const MatrixRef& x) {
  require(!ens.abstained(), ErrorKind::validation, "predict_bimp: the ensemble abstained");
  const Eigen::Index n = x.rows();
  Vector sum = Vector::Zero(n);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(n);
  for (const PairModel& model : ens.members) {
    try {
      const PairPrediction p = predict_pair(model, x);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (p.degenerate[static_cast<std::size_t>(i)]) continue;
        sum[i] += p.values[i];
        ++count[i];
      }
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::degenerate_pair) throw;
    }
  }
  BimpPrediction out;
  out.probabilities = Vector::Zero(n);
  out.labels = Eigen::VectorXi::Zero(n);
  out.fallback.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (count[i] > 0) {
      out.probabilities[i] = sum[i] / count[i];
    } else {
      out.probabilities[i] = ens.base_rate;
      out.fallback[static_cast<std::size_t>(i)] = 1;
    }
    out.labels[i] = out.probabilities[i] >= 0.5 ? 1 : 0;
  }
  return out;
}

}  // namespace invarbin
