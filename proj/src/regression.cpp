#include "invarbin/regression.hpp"

#include <cmath>

#include "invarbin/error.hpp"

namespace invarbin {
namespace {

constexpr double kRankThreshold = 1e-7;

void require_finite(const MatrixRef& x, const VectorRef& y, const char* who) {
  require(x.allFinite() && y.allFinite(), ErrorKind::validation, std::string(who) + ": non-finite input");
  require(x.rows() == y.size(), ErrorKind::validation, std::string(who) + ": row count mismatch");
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vector LinearModel::predict(const MatrixRef& x) const {
  require(x.cols() == inputs(), ErrorKind::validation,
          "LinearModel::predict: expected " + std::to_string(inputs()) + " columns, got " +
              std::to_string(x.cols()));
  Vector out = Vector::Constant(x.rows(), coefficients[0]);
  if (inputs() > 0) out.noalias() += x * coefficients.tail(inputs());
  return out;
}

LinearModel fit_ols(const MatrixRef& x, const VectorRef& y, IndexList columns) {
  require_finite(x, y, "fit_ols");
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  require(n >= 2, ErrorKind::insufficient_data, "fit_ols: need at least two rows");

  LinearModel model;
  model.columns = std::move(columns);
  model.coefficients = Vector::Zero(p + 1);
  const double y_mean = y.mean();
  if (p == 0) {
    model.coefficients[0] = y_mean;
    return model;
  }

  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  Matrix xs = x.rowwise() - x_mean;
  Vector scale = (xs.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < p; ++j) {
    if (!(scale[j] > 1e-12 * (1.0 + std::abs(x_mean[j])))) scale[j] = 0.0;
    xs.col(j) *= scale[j] > 0.0 ? 1.0 / scale[j] : 0.0;
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  cod.setThreshold(kRankThreshold);
  cod.compute(xs);
  const Vector beta_scaled = cod.solve((y.array() - y_mean).matrix());
  Vector beta(p);
  for (Eigen::Index j = 0; j < p; ++j) beta[j] = scale[j] > 0.0 ? beta_scaled[j] / scale[j] : 0.0;
  model.coefficients.tail(p) = beta;
  model.coefficients[0] = y_mean - x_mean.dot(beta);
  return model;
}

Vector predict(const LinearModel& model, const MatrixRef& x) { return model.predict(x); }
Vector predict(const AdditiveSplineModel& model, const MatrixRef& x) { return model.predict(x); }
Vector predict(const LogisticModel& model, const MatrixRef& x) { return model.predict_proba(x); }

}  // namespace invarbin
