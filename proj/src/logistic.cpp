#include <cmath>

#include "invarbin/error.hpp"
#include "invarbin/regression.hpp"

namespace invarbin {
namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double mean_nll(const Vector& eta, const VectorRef& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += softplus(eta[i]) - y[i] * eta[i];
  return s / static_cast<double>(eta.size());
}

// Gradient of the mean log-likelihood in the caller's coordinates.
double raw_gradient_norm(const MatrixRef& x, const Vector& prob, const VectorRef& y) {
  const Vector r = prob - y;
  const double n = static_cast<double>(r.size());
  const double g0 = r.sum() / n;
  if (x.cols() == 0) return std::abs(g0);
  return std::sqrt(g0 * g0 + (x.transpose() * r / n).squaredNorm());
}

// Every row strictly on its own side of the hyperplane: no finite maximum.
bool separated(const Vector& eta, const VectorRef& y) {
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    if (y[i] == 1.0 ? !(eta[i] > 0.0) : !(eta[i] < 0.0)) return false;
  }
  return true;
}

}  // namespace

Vector LogisticModel::linear_predictor(const MatrixRef& x) const {
  require(x.cols() == inputs(), ErrorKind::validation,
          "LogisticModel: expected " + std::to_string(inputs()) + " columns, got " + std::to_string(x.cols()));
  Vector eta = Vector::Constant(x.rows(), coefficients[0]);
  if (inputs() > 0) eta.noalias() += x * coefficients.tail(inputs());
  return eta;
}

Vector LogisticModel::predict_proba(const MatrixRef& x) const {
  Vector p = linear_predictor(x);
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = sigmoid(p[i]);
  return p;
}

LogisticModel fit_logistic(const MatrixRef& x, const VectorRef& y, const LogisticOptions& options,
                           IndexList columns) {
  require(x.allFinite() && y.allFinite(), ErrorKind::validation, "fit_logistic: non-finite input");
  require(x.rows() == y.size(), ErrorKind::validation, "fit_logistic: row count mismatch");
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    require(y[i] == 0.0 || y[i] == 1.0, ErrorKind::validation, "fit_logistic: y must be 0/1");
    (y[i] == 1.0 ? has1 : has0) = true;
  }
  require(has0 && has1, ErrorKind::degenerate_response, "fit_logistic: response has a single class");

  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  // Newton is affine invariant; standardizing only helps the rank cut-off.
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  Vector scale = ((x.rowwise() - x_mean).colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
  Matrix z(n, p + 1);
  z.col(0).setOnes();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(scale[j] > 1e-12 * (1.0 + std::abs(x_mean[j])))) scale[j] = 0.0;
    if (scale[j] > 0.0) {
      z.col(j + 1) = (x.col(j).array() - x_mean[j]) / scale[j];
    } else {
      z.col(j + 1).setZero();
    }
  }

  LogisticModel model;
  model.columns = std::move(columns);
  Vector w = Vector::Zero(p + 1);
  const double ybar = y.mean();
  w[0] = std::log(ybar / (1.0 - ybar));
  Vector eta = z * w;
  double loss = mean_nll(eta, y);
  model.loss_history.push_back(loss);

  Vector prob(n);
  Vector grad(p + 1);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(1e-10);
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) prob[i] = sigmoid(eta[i]);
    grad.noalias() = z.transpose() * (prob - y) / static_cast<double>(n);
    model.gradient_norm = raw_gradient_norm(x, prob, y);
    if (model.gradient_norm < options.tol) {
      model.converged = !separated(eta, y);
      break;
    }
    const Vector weight = (prob.array() * (1.0 - prob.array())).sqrt();
    const Matrix zw = z.array().colwise() * weight.array();
    Matrix hess = Matrix::Zero(p + 1, p + 1);
    hess.selfadjointView<Eigen::Lower>().rankUpdate(zw.transpose(), 1.0 / static_cast<double>(n));
    hess = hess.selfadjointView<Eigen::Lower>();
    cod.compute(hess);
    Vector step = cod.solve(grad);

    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h) {
      const Vector w_new = w - step;
      const Vector eta_new = z * w_new;
      const double loss_new = mean_nll(eta_new, y);
      if (std::isfinite(loss_new) && loss_new <= loss) {
        w = w_new;
        eta = eta_new;
        loss = loss_new;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    model.loss_history.push_back(loss);
  }
  if (!model.converged) {
    for (Eigen::Index i = 0; i < n; ++i) prob[i] = sigmoid(eta[i]);
    model.gradient_norm = raw_gradient_norm(x, prob, y);
    model.converged = model.gradient_norm < options.tol && !separated(eta, y);
  }
  model.iterations = iter;
  model.diverged = !model.converged;

  model.coefficients = Vector::Zero(p + 1);
  double intercept = w[0];
  for (Eigen::Index j = 0; j < p; ++j) {
    if (scale[j] > 0.0) {
      model.coefficients[j + 1] = w[j + 1] / scale[j];
      intercept -= model.coefficients[j + 1] * x_mean[j];
    }
  }
  model.coefficients[0] = intercept;
  return model;
}

}  // namespace invarbin
