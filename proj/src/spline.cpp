#include <algorithm>
#include <cmath>

#include "invarbin/error.hpp"
#include "invarbin/regression.hpp"

namespace invarbin {
namespace {

// Type-7 sample quantile of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double cube_plus(double v) { return v > 0.0 ? v * v * v : 0.0; }
double square_plus(double v) { return v > 0.0 ? v * v : 0.0; }

// Truncated-power natural spline basis on knots k_1 < ... < k_K:
// N_1(u) = u, N_{j+1}(u) = d_j(u) - d_{K-1}(u) for j = 1..K-2 with
// d_j(u) = ((u - k_j)_+^3 - (u - k_K)_+^3) / (k_K - k_j).
void natural_basis(const std::vector<double>& k, double u, double* out) {
  const std::size_t K = k.size();
  const double last = k[K - 1];
  auto d = [&](std::size_t j) { return (cube_plus(u - k[j]) - cube_plus(u - last)) / (last - k[j]); };
  out[0] = u;
  const double d_tail = d(K - 2);
  for (std::size_t j = 0; j + 2 < K; ++j) out[j + 1] = d(j) - d_tail;
}

void natural_basis_derivative(const std::vector<double>& k, double u, double* out) {
  const std::size_t K = k.size();
  const double last = k[K - 1];
  auto dd = [&](std::size_t j) {
    return 3.0 * (square_plus(u - k[j]) - square_plus(u - last)) / (last - k[j]);
  };
  out[0] = 1.0;
  const double d_tail = dd(K - 2);
  for (std::size_t j = 0; j + 2 < K; ++j) out[j + 1] = dd(j) - d_tail;
}

}  // namespace

AdditiveTerm make_additive_term(const VectorRef& column, int knots_per_feature) {
  AdditiveTerm term;
  std::vector<double> sorted(column.data(), column.data() + column.size());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (!(hi > lo)) return term;  // constant

  const double mean = column.mean();
  const double sd = std::sqrt((column.array() - mean).square().mean());
  term.center = mean;
  term.scale = sd > 0.0 ? sd : 1.0;
  term.kind = AdditiveTerm::Kind::linear;

  std::size_t distinct = 1;
  for (std::size_t i = 1; i < sorted.size() && distinct < 3; ++i) distinct += sorted[i] != sorted[i - 1];
  if (distinct < 3 || knots_per_feature < 3) return term;

  std::vector<double> knots;
  const double tiny = 1e-9 * (hi - lo) / term.scale;
  for (int j = 1; j <= knots_per_feature; ++j) {
    const double q = static_cast<double>(j) / static_cast<double>(knots_per_feature + 1);
    const double u = (quantile_sorted(sorted, q) - term.center) / term.scale;
    if (knots.empty() || u > knots.back() + tiny) knots.push_back(u);
  }
  if (knots.size() >= 3) {
    term.kind = AdditiveTerm::Kind::spline;
    term.knots = std::move(knots);
  }
  return term;
}

int AdditiveTerm::basis_size() const {
  switch (kind) {
    case Kind::constant: return 0;
    case Kind::linear: return 1;
    case Kind::spline: return static_cast<int>(knots.size()) - 1;
  }
  return 0;
}

void AdditiveTerm::basis(double x, double* out) const {
  if (kind == Kind::constant) return;
  const double u = (x - center) / scale;
  if (kind == Kind::linear) {
    out[0] = u;
    return;
  }
  const double first = knots.front();
  const double last = knots.back();
  if (u >= first && u <= last) {
    natural_basis(knots, u, out);
    return;
  }
  // Exactly linear outside the boundary knots; evaluate it that way so large
  // |u| never meets cancelling cubes.
  const double edge = u < first ? first : last;
  const std::size_t p = knots.size() - 1;
  double value[32];
  double slope[32];
  std::vector<double> heap_value, heap_slope;
  double* v = value;
  double* s = slope;
  if (p > 32) {
    heap_value.resize(p);
    heap_slope.resize(p);
    v = heap_value.data();
    s = heap_slope.data();
  }
  natural_basis(knots, edge, v);
  natural_basis_derivative(knots, edge, s);
  for (std::size_t j = 0; j < p; ++j) out[j] = v[j] + s[j] * (u - edge);
}

double AdditiveTerm::evaluate(double x) const {
  const int p = basis_size();
  if (p == 0) return 0.0;
  Vector b(p);
  basis(x, b.data());
  return b.dot(coefficients);
}

Vector AdditiveSplineModel::predict(const MatrixRef& x) const {
  require(x.cols() == inputs(), ErrorKind::validation,
          "AdditiveSplineModel::predict: expected " + std::to_string(inputs()) + " columns, got " +
              std::to_string(x.cols()));
  Vector out = Vector::Constant(x.rows(), intercept);
  for (int j = 0; j < inputs(); ++j) {
    const auto& term = terms[static_cast<std::size_t>(j)];
    if (term.kind == AdditiveTerm::Kind::constant) continue;
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] += term.evaluate(x(i, j));
  }
  return out;
}

AdditiveSplineModel fit_spline_additive(const MatrixRef& x, const VectorRef& y, const SplineOptions& options,
                                        IndexList columns) {
  require(x.allFinite() && y.allFinite(), ErrorKind::validation, "fit_spline_additive: non-finite input");
  require(x.rows() == y.size(), ErrorKind::validation, "fit_spline_additive: row count mismatch");
  require(x.rows() >= 2, ErrorKind::insufficient_data, "fit_spline_additive: need at least two rows");
  require(options.lambda >= 0.0, ErrorKind::validation, "fit_spline_additive: lambda must be nonnegative");

  const Eigen::Index n = x.rows();
  AdditiveSplineModel model;
  model.lambda = options.lambda;
  model.columns = std::move(columns);
  int total = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    model.terms.push_back(make_additive_term(x.col(j), options.knots_per_feature));
    total += model.terms.back().basis_size();
  }
  const double y_mean = y.mean();
  model.intercept = y_mean;
  if (total == 0) return model;

  Matrix basis(n, total);
  {
    Eigen::RowVectorXd row(total);
    for (Eigen::Index i = 0; i < n; ++i) {
      int offset = 0;
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const auto& term = model.terms[static_cast<std::size_t>(j)];
        term.basis(x(i, j), row.data() + offset);
        offset += term.basis_size();
      }
      basis.row(i) = row;
    }
  }
  const Eigen::RowVectorXd b_mean = basis.colwise().mean();
  basis.rowwise() -= b_mean;
  Vector b_scale = (basis.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
  for (int c = 0; c < total; ++c) {
    if (!(b_scale[c] > 0.0)) b_scale[c] = 0.0;
    basis.col(c) *= b_scale[c] > 0.0 ? 1.0 / b_scale[c] : 0.0;
  }
  const Vector yc = (y.array() - y_mean).matrix();
  Vector theta_scaled;
  if (options.lambda > 0.0) {
    Matrix gram = Matrix::Identity(total, total) * options.lambda;
    gram.selfadjointView<Eigen::Lower>().rankUpdate(basis.transpose());
    gram = gram.selfadjointView<Eigen::Lower>();
    theta_scaled = gram.ldlt().solve(basis.transpose() * yc);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
    cod.setThreshold(1e-7);
    cod.compute(basis);
    theta_scaled = cod.solve(yc);
  }
  Vector theta(total);
  for (int c = 0; c < total; ++c) theta[c] = b_scale[c] > 0.0 ? theta_scaled[c] / b_scale[c] : 0.0;
  model.intercept = y_mean - b_mean.dot(theta);
  int offset = 0;
  for (auto& term : model.terms) {
    const int p = term.basis_size();
    term.coefficients = theta.segment(offset, p);
    offset += p;
  }
  return model;
}

}  // namespace invarbin
