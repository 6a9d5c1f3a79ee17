#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "invarbin/dataset.hpp"
#include "invarbin/rng.hpp"

namespace fixtures {

using invarbin::EnvRole;
using invarbin::Matrix;
using invarbin::MultiEnvDataset;

/// Column 0 is X_k = X_S eta_Y + N(0, 1); columns 1..2 are X_S with
/// environment-specific means, and Y's link changes per environment.
/// `shift` offsets the class-1 mechanism of X_k in the second training env.
inline MultiEnvDataset matching_data(std::uint64_t seed, int n_per_env = 1000, double shift = 0.0,
                                     bool with_test = true) {
  invarbin::Rng rng(seed);
  const double eta[2][2] = {{1.0, -0.5}, {-0.5, 1.5}};
  const double mu[3][2] = {{-1.0, 0.0}, {1.0, 0.5}, {2.0, -1.0}};
  const double link[3][2] = {{1.0, -0.5}, {-0.8, 1.2}, {0.3, 0.3}};
  const int envs = with_test ? 3 : 2;
  const int n = n_per_env * envs;
  Matrix x(n, 3);
  Eigen::VectorXi y(n);
  std::vector<int> env(static_cast<std::size_t>(n));
  for (int e = 0; e < envs; ++e) {
    for (int i = 0; i < n_per_env; ++i) {
      const int r = e * n_per_env + i;
      const double s0 = rng.normal(mu[e][0], 1.0), s1 = rng.normal(mu[e][1], 1.0);
      const double t = link[e][0] * s0 + link[e][1] * s1;
      const int yy = rng.bernoulli(1.0 / (1.0 + std::exp(-t))) ? 1 : 0;
      const double offset = e == 1 && yy == 1 ? shift : 0.0;
      x(r, 0) = eta[yy][0] * s0 + eta[yy][1] * s1 + offset + rng.normal();
      x(r, 1) = s0;
      x(r, 2) = s1;
      y[r] = yy;
      env[static_cast<std::size_t>(r)] = e;
    }
  }
  std::vector<invarbin::EnvironmentId> ids{{"e1", EnvRole::train}, {"e2", EnvRole::train}};
  if (with_test) ids.push_back({"test", EnvRole::test});
  return MultiEnvDataset::from_numeric(x, y, env, ids);
}

}  // namespace fixtures
