#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "invarbin/baselines.hpp"
#include "invarbin/evaluation.hpp"
#include "invarbin/experiments.hpp"

using namespace invarbin;

namespace {

// Y depends on X1 alone through a fixed logistic link; X1 and X2 shift in
// mean, and X3 is a child of Y whose mechanism changes per environment.
MultiEnvDataset icp_data(std::uint64_t seed, int n) {
  Rng rng(seed);
  Matrix x(3 * n, 3);
  Eigen::VectorXi y(3 * n);
  std::vector<int> env(static_cast<std::size_t>(3 * n));
  for (int e = 0; e < 3; ++e) {
    for (int i = 0; i < n; ++i) {
      const int r = e * n + i;
      const double x1 = rng.normal(e - 1.0, 1.0);
      const double x2 = rng.normal(1.0 - e, 1.0);
      const int yy = rng.bernoulli(1.0 / (1.0 + std::exp(-1.5 * x1))) ? 1 : 0;
      const double x3 = (1.0 + 2.0 * e) * yy + 0.5 * x2 + rng.normal();
      x.row(r) << x1, x2, x3;
      y[r] = yy;
      env[static_cast<std::size_t>(r)] = e;
    }
  }
  return MultiEnvDataset::from_numeric(x, y, env,
                                       {{"a", EnvRole::train}, {"b", EnvRole::train}, {"test", EnvRole::test}});
}

}  // namespace

TEST_SUITE("baselines") {
  TEST_CASE("pooled LR beats a constant in-sample") {
    const MultiEnvDataset d = fixtures::matching_data(1);
    const LogisticModel m = fit_lr_baseline(d);
    const MultiEnvDataset train = training_rows(d);
    const double acc = accuracy(predict_labels(m, train.features()), train.response());
    const double base = train.response().cast<double>().mean();
    CHECK(acc >= 0.5);
    CHECK(acc >= std::max(base, 1.0 - base));
    CHECK(m.columns.size() == 3);
  }

  TEST_CASE("pooling ignores environment labels") {
    const MultiEnvDataset d = fixtures::matching_data(2, 300, 0.0, false);
    std::vector<int> shuffled = d.env_of();
    Rng rng(1);
    for (auto& e : shuffled) e = rng.bernoulli(0.5) ? 1 : 0;
    const MultiEnvDataset d2(d.features(), d.response(), shuffled, d.environments(), d.column_names(),
                             d.column_group(), d.group_names());
    CHECK((fit_lr_baseline(d).coefficients - fit_lr_baseline(d2).coefficients).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("single-feature logistic coefficients are recovered") {
    Rng rng(3);
    const int n = 10000;
    Matrix x(2 * n, 1);
    Eigen::VectorXi y(2 * n);
    std::vector<int> env(static_cast<std::size_t>(2 * n));
    for (int r = 0; r < 2 * n; ++r) {
      x(r, 0) = rng.normal(r < n ? -0.5 : 0.5, 1.0);
      y[r] = rng.bernoulli(1.0 / (1.0 + std::exp(-x(r, 0)))) ? 1 : 0;
      env[static_cast<std::size_t>(r)] = r < n ? 0 : 1;
    }
    const LogisticModel m = fit_lr_baseline(
        MultiEnvDataset::from_numeric(x, y, env, {{"a", EnvRole::train}, {"b", EnvRole::train}}));
    CHECK(std::abs(m.coefficients[0]) < 0.1);
    CHECK(std::abs(m.coefficients[1] - 1.0) < 0.1);
  }

  TEST_CASE("ICP finds a subset of the causal parents") {
    int good = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const IcpResult r = fit_icp(icp_data(seed, 1000));
      const bool parent_accepted =
          std::find(r.accepted_sets.begin(), r.accepted_sets.end(), IndexList{0}) != r.accepted_sets.end();
      const bool subset = std::all_of(r.intersection.begin(), r.intersection.end(), [](int c) { return c == 0; });
      good += parent_accepted && subset;
    }
    CHECK(good >= 160);
  }

  TEST_CASE("ICP on the intervened-response design abstains or does no better than LR") {
    ExperimentOptions o;
    o.methods = {"lr", "icp"};
    const Fig2Result r = run_fig2(20, 5, o);
    const std::vector<MethodStats> stats = aggregate_replicates(r.summaries);
    const MethodStats& icp = stats[0].method == "icp" ? stats[0] : stats[1];
    const MethodStats& lr = stats[0].method == "lr" ? stats[0] : stats[1];
    CHECK((icp.abstention_rate >= 0.5 || *icp.accuracy_median <= *lr.accuracy_median));
  }

  TEST_CASE("ICP with alpha = 1 abstains") {
    IcpOptions o;
    o.alpha = 1.0;
    const IcpResult r = fit_icp(icp_data(1, 300), o);
    CHECK(r.abstained());
    CHECK_FALSE(predict_baseline(r, Matrix::Zero(2, 3)).has_value());
  }

  TEST_CASE("ICP records every tested subset") {
    const IcpResult r = fit_icp(icp_data(2, 300));
    CHECK(r.tested.size() == 1 + 3 + 3);
    for (const IcpSetResult& s : r.tested) CHECK(s.accepted == (s.p_value > r.alpha));
  }

  TEST_CASE("label threshold") {
    LogisticModel zero;
    zero.coefficients = Vector::Zero(2);
    CHECK((predict_labels(zero, Matrix::Random(4, 1)).array() == 1).all());
    Matrix x(6, 1);
    x << -3, -2, -1, 1, 2, 3;
    Eigen::VectorXi y(6);
    y << 0, 0, 0, 1, 1, 1;
    const LogisticModel sep = fit_lr_baseline(MultiEnvDataset::from_numeric(
        x, y, {0, 1, 0, 1, 0, 1}, {{"a", EnvRole::train}, {"b", EnvRole::train}}));
    CHECK(*predict_baseline(sep, x) == y);
  }

  TEST_CASE("deviance residuals") {
    Vector y(2), p(2);
    y << 1, 0;
    p << 0.8, 0.8;
    const Vector r = deviance_residuals(y, p);
    CHECK(r[0] == doctest::Approx(std::sqrt(-2.0 * std::log(0.8))));
    CHECK(r[1] == doctest::Approx(-std::sqrt(-2.0 * std::log(0.2))));
    const Vector q = pearson_residuals(y, p);
    CHECK(q[0] == doctest::Approx(0.2 / std::sqrt(0.16)));
    CHECK(q[1] == doctest::Approx(-0.8 / std::sqrt(0.16)));
  }

  TEST_CASE("deviance residuals drift with a covariate shift") {
    int good = 0;
    IcpOptions o;
    o.residual = IcpResidual::deviance;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const IcpResult r = fit_icp(icp_data(seed, 1000), o);
      good += std::find(r.accepted_sets.begin(), r.accepted_sets.end(), IndexList{0}) != r.accepted_sets.end();
    }
    CHECK(good < 16);
  }
}
