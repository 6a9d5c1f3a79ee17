#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "invarbin/dataset.hpp"

namespace invarbin {

/// One environment of the three-variable probit example.
struct MotivatingEnv {
  std::string label;
  EnvRole role = EnvRole::train;
  double beta1 = 2.0;
  double beta2 = 1.0;
  double mu1 = 0.0;
  double mu2 = 1.0;
  int n = 1000;
};

/// X1 ~ N(mu1, sigma1^2), X2 ~ N(mu2, sigma2^2), Y = 1{beta1 X1 + beta2 X2 +
/// eps_Y > 0} with eps_Y ~ N(0, sigma^2), X3 = gamma_Y X1 + eps_3 with
/// eps_3 ~ N(0, sigma3^2). Columns are X1, X2, X3.
struct MotivatingConfig {
  std::vector<MotivatingEnv> envs;
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  double sigma = 1.0;
  double sigma3 = 1.0;
  double gamma0 = -1.0;
  double gamma1 = 1.0;
  std::uint64_t seed = 1;
};

/// Two identical training environments (beta1 = 2, beta2 = 1, mu2 = 1) and a
/// test environment with beta2 = 0 and mu2 = -1.
MotivatingConfig fig1_config(std::uint64_t seed = 1, int n_train = 5000, int n_test = 10000);

MultiEnvDataset gen_motivating(const MotivatingConfig& cfg);

/// Closed-form P(Y = 1 | X1 = x1) in environment `env`.
double motivating_posterior(const MotivatingConfig& cfg, const MotivatingEnv& env, double x1);
/// E[X3 | X1 = x1] = P(Y=1|x1) (gamma1 - gamma0) x1 + gamma0 x1.
double motivating_x3_marginal(const MotivatingConfig& cfg, const MotivatingEnv& env, double x1);

struct SynthConfig {
  /// Number of predictors; nullopt draws it uniformly from {3, ..., 7}.
  std::optional<int> m;
  int n_per_env = 1000;
  /// Intervals for mu_i^e, i >= 2: train1, train2, test.
  std::array<std::pair<double, double>, 3> mu_ranges{{{-2.0, 0.0}, {0.0, 2.0}, {0.0, 3.0}}};
  /// Fixed beta (length m - 1) for every environment instead of random draws.
  std::optional<std::vector<double>> beta;
  /// Force eta_0 = eta_1 (the degenerate case).
  bool equal_eta = false;
  std::uint64_t seed = 1;
};

/// Parameters actually drawn for one synthetic dataset.
struct SynthDraw {
  int m = 0;
  std::array<std::vector<double>, 3> beta;  // per environment, sums to 1
  std::array<std::vector<double>, 3> mu;    // per environment, for X2..Xm
  std::vector<double> eta0;
  std::vector<double> eta1;
};

struct SynthData {
  MultiEnvDataset data;
  SynthDraw draw;
};

/// Environments train1, train2 (logistic link) and test (probit with the
/// sign flip Y = 1{X beta + eps < 0}). Column 0 is X1 = X_{2..m} eta_Y +
/// N(0, 1); columns 1..m-1 are X2..Xm ~ N(mu_i^e, 1).
SynthData gen_synthetic(const SynthConfig& cfg);

/// CSV export with columns env, role, y, then the feature names.
void write_dataset_csv(const MultiEnvDataset& d, const std::string& path);

}  // namespace invarbin
