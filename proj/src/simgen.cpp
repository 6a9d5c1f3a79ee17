#include "invarbin/simgen.hpp"

#include <cmath>
#include <fstream>

#include "invarbin/csv.hpp"
#include "invarbin/error.hpp"
#include "invarbin/rng.hpp"
#include "invarbin/stats.hpp"

namespace invarbin {

MotivatingConfig fig1_config(std::uint64_t seed, int n_train, int n_test) {
  MotivatingConfig cfg;
  cfg.seed = seed;
  cfg.envs = {
      {"train1", EnvRole::train, 2.0, 1.0, 0.0, 1.0, n_train},
      {"train2", EnvRole::train, 2.0, 1.0, 0.0, 1.0, n_train},
      {"test", EnvRole::test, 2.0, 0.0, 0.0, -1.0, n_test},
  };
  return cfg;
}

MultiEnvDataset gen_motivating(const MotivatingConfig& cfg) {
  require(cfg.sigma > 0.0 && cfg.sigma1 > 0.0 && cfg.sigma2 > 0.0 && cfg.sigma3 > 0.0, ErrorKind::validation,
          "gen_motivating: noise scales must be positive");
  require(cfg.gamma0 != cfg.gamma1, ErrorKind::validation, "gen_motivating: gamma0 must differ from gamma1");
  require(!cfg.envs.empty(), ErrorKind::validation, "gen_motivating: no environments");
  int n = 0;
  for (const auto& e : cfg.envs) n += e.n;
  Matrix x(n, 3);
  Eigen::VectorXi y(n);
  std::vector<int> env_of(static_cast<std::size_t>(n));
  std::vector<EnvironmentId> ids;
  int row = 0;
  for (std::size_t e = 0; e < cfg.envs.size(); ++e) {
    const MotivatingEnv& env = cfg.envs[e];
    ids.push_back({env.label, env.role});
    Rng rng(derive_seed(cfg.seed, e));
    for (int i = 0; i < env.n; ++i, ++row) {
      const double x1 = rng.normal(env.mu1, cfg.sigma1);
      const double x2 = rng.normal(env.mu2, cfg.sigma2);
      const double eps_y = rng.normal(0.0, cfg.sigma);
      const int yi = env.beta1 * x1 + env.beta2 * x2 + eps_y > 0.0 ? 1 : 0;
      const double x3 = (yi ? cfg.gamma1 : cfg.gamma0) * x1 + rng.normal(0.0, cfg.sigma3);
      x(row, 0) = x1;
      x(row, 1) = x2;
      x(row, 2) = x3;
      y[row] = yi;
      env_of[static_cast<std::size_t>(row)] = static_cast<int>(e);
    }
  }
  return MultiEnvDataset::from_numeric(std::move(x), std::move(y), std::move(env_of), std::move(ids));
}

double motivating_posterior(const MotivatingConfig& cfg, const MotivatingEnv& env, double x1) {
  const double sd = std::sqrt(env.beta2 * cfg.sigma2 * env.beta2 * cfg.sigma2 + cfg.sigma * cfg.sigma);
  return normal_cdf((env.beta1 * x1 + env.beta2 * env.mu2) / sd);
}

double motivating_x3_marginal(const MotivatingConfig& cfg, const MotivatingEnv& env, double x1) {
  return motivating_posterior(cfg, env, x1) * (cfg.gamma1 - cfg.gamma0) * x1 + cfg.gamma0 * x1;
}

SynthData gen_synthetic(const SynthConfig& cfg) {
  require(cfg.n_per_env >= 1, ErrorKind::validation, "gen_synthetic: n_per_env must be positive");
  Rng rng(derive_seed(cfg.seed, 0));
  SynthData out;
  SynthDraw& draw = out.draw;
  draw.m = cfg.m ? *cfg.m : static_cast<int>(rng.uniform_int(3, 7));
  require(draw.m >= 2, ErrorKind::validation, "gen_synthetic: m must be at least 2");
  const int q = draw.m - 1;

  for (int e = 0; e < 3; ++e) {
    std::vector<double> beta(static_cast<std::size_t>(q));
    if (cfg.beta) {
      require(static_cast<int>(cfg.beta->size()) == q, ErrorKind::validation, "gen_synthetic: beta length must be m - 1");
      beta = *cfg.beta;
    } else {
      for (double& b : beta) b = rng.uniform();
    }
    double total = 0.0;
    for (double b : beta) total += b;
    require(total > 0.0, ErrorKind::validation, "gen_synthetic: beta sums to zero");
    for (double& b : beta) b /= total;
    draw.beta[static_cast<std::size_t>(e)] = std::move(beta);
    std::vector<double> mu(static_cast<std::size_t>(q));
    const auto [lo, hi] = cfg.mu_ranges[static_cast<std::size_t>(e)];
    for (double& v : mu) v = rng.uniform(lo, hi);
    draw.mu[static_cast<std::size_t>(e)] = std::move(mu);
  }
  draw.eta0.resize(static_cast<std::size_t>(q));
  draw.eta1.resize(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i) {
    draw.eta1[static_cast<std::size_t>(i)] = rng.uniform();
    draw.eta0[static_cast<std::size_t>(i)] = cfg.equal_eta ? draw.eta1[static_cast<std::size_t>(i)] : rng.uniform();
  }

  const int n = 3 * cfg.n_per_env;
  Matrix x(n, draw.m);
  Eigen::VectorXi y(n);
  std::vector<int> env_of(static_cast<std::size_t>(n));
  const std::vector<EnvironmentId> ids{{"train1", EnvRole::train}, {"train2", EnvRole::train}, {"test", EnvRole::test}};
  int row = 0;
  for (int e = 0; e < 3; ++e) {
    Rng env_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(e) + 1));
    const auto& beta = draw.beta[static_cast<std::size_t>(e)];
    const auto& mu = draw.mu[static_cast<std::size_t>(e)];
    for (int i = 0; i < cfg.n_per_env; ++i, ++row) {
      double lin = 0.0;
      for (int j = 0; j < q; ++j) {
        const double v = env_rng.normal(mu[static_cast<std::size_t>(j)], 1.0);
        x(row, j + 1) = v;
        lin += v * beta[static_cast<std::size_t>(j)];
      }
      int yi;
      if (e < 2) {
        yi = env_rng.uniform() < 1.0 / (1.0 + std::exp(-lin)) ? 1 : 0;
      } else {
        yi = lin + env_rng.normal() < 0.0 ? 1 : 0;
      }
      const auto& eta = yi ? draw.eta1 : draw.eta0;
      double x1 = env_rng.normal();
      for (int j = 0; j < q; ++j) x1 += x(row, j + 1) * eta[static_cast<std::size_t>(j)];
      x(row, 0) = x1;
      y[row] = yi;
      env_of[static_cast<std::size_t>(row)] = e;
    }
  }
  out.data = MultiEnvDataset::from_numeric(std::move(x), std::move(y), std::move(env_of), ids);
  return out;
}

void write_dataset_csv(const MultiEnvDataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  std::vector<std::string> header{"env", "role", "y"};
  for (const auto& name : d.column_names()) header.push_back(name);
  write_csv_row(out, header);
  std::vector<std::string> fields(header.size());
  for (int r = 0; r < d.rows(); ++r) {
    const EnvironmentId& env = d.environments()[static_cast<std::size_t>(d.env_of()[static_cast<std::size_t>(r)])];
    fields[0] = env.label;
    fields[1] = std::string(to_string(env.role));
    fields[2] = std::to_string(d.response()[r]);
    for (int c = 0; c < d.cols(); ++c) fields[static_cast<std::size_t>(c) + 3] = format_double(d.features()(r, c));
    write_csv_row(out, fields);
  }
  require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path);
}

}  // namespace invarbin
