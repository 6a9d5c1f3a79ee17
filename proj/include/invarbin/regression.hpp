#pragma once

#include <vector>

#include "invarbin/dataset.hpp"

namespace invarbin {

using MatrixRef = Eigen::Ref<const Matrix>;
using VectorRef = Eigen::Ref<const Vector>;

/// Affine predictor: coefficients(0) is the intercept.
struct LinearModel {
  Vector coefficients = Vector::Zero(1);
  /// Dataset columns the inputs came from (bookkeeping only).
  IndexList columns;

  int inputs() const { return static_cast<int>(coefficients.size()) - 1; }
  double intercept() const { return coefficients[0]; }
  Vector predict(const MatrixRef& x) const;
};

/// Least squares with an intercept, solved through a complete orthogonal
/// decomposition of the centred, unit-scaled design. Rank-deficient designs
/// get the minimum-norm slope vector in those scaled coordinates; constant
/// columns get a zero slope.
LinearModel fit_ols(const MatrixRef& x, const VectorRef& y, IndexList columns = {});

struct SplineOptions {
  int knots_per_feature = 5;
  double lambda = 1e-3;
};

/// One additive component f_j(x_j) of an AdditiveSplineModel.
struct AdditiveTerm {
  enum class Kind { constant, linear, spline };

  Kind kind = Kind::constant;
  double center = 0.0;
  double scale = 1.0;
  /// Knots on the standardized scale (x - center) / scale, strictly increasing.
  std::vector<double> knots;
  /// One coefficient per basis function: [u, N_1(u), ..., N_{K-2}(u)].
  Vector coefficients;

  int basis_size() const;
  /// Basis row at raw value x; linear beyond the boundary knots.
  void basis(double x, double* out) const;
  double evaluate(double x) const;
};

/// Term for one column: constant, linear, or natural spline with knots at
/// interior quantiles. Coefficients are left empty.
AdditiveTerm make_additive_term(const VectorRef& column, int knots_per_feature);

/// Additive natural-cubic-spline regressor with a ridge penalty.
struct AdditiveSplineModel {
  double intercept = 0.0;
  std::vector<AdditiveTerm> terms;  // one per input column
  double lambda = 0.0;
  IndexList columns;

  int inputs() const { return static_cast<int>(terms.size()); }
  Vector predict(const MatrixRef& x) const;
};

/// Minimizes ||y - f(X)||^2 + lambda ||theta||^2, theta being the basis
/// coefficients on unit-variance basis columns (the intercept is free).
/// Columns with fewer than three distinct knots (e.g. one-hot indicators)
/// enter linearly; constant columns contribute nothing.
AdditiveSplineModel fit_spline_additive(const MatrixRef& x, const VectorRef& y,
                                        const SplineOptions& options = {}, IndexList columns = {});

struct LogisticOptions {
  int max_iter = 100;
  double tol = 1e-8;
  int max_halvings = 20;
};

struct LogisticModel {
  Vector coefficients = Vector::Zero(1);
  IndexList columns;
  int iterations = 0;
  /// Norm of the mean log-likelihood gradient at `coefficients`.
  double gradient_norm = 0.0;
  bool converged = false;
  /// Set when the fit stopped without converging (typically separation).
  bool diverged = false;
  /// Mean negative log-likelihood after each accepted iteration.
  std::vector<double> loss_history;

  int inputs() const { return static_cast<int>(coefficients.size()) - 1; }
  Vector predict_proba(const MatrixRef& x) const;
  Vector linear_predictor(const MatrixRef& x) const;
};

/// Maximum likelihood by damped Newton (step halving). Throws
/// Error(degenerate_response) when y holds a single class.
LogisticModel fit_logistic(const MatrixRef& x, const VectorRef& y, const LogisticOptions& options = {},
                           IndexList columns = {});

Vector predict(const LinearModel& model, const MatrixRef& x);
Vector predict(const AdditiveSplineModel& model, const MatrixRef& x);
/// Probabilities in (0, 1).
Vector predict(const LogisticModel& model, const MatrixRef& x);

/// Numerically stable logistic function.
double sigmoid(double z);

}  // namespace invarbin
