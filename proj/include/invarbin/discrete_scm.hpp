#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "invarbin/dataset.hpp"
#include "invarbin/error.hpp"
#include "invarbin/rng.hpp"

namespace invarbin {

using Rational = boost::multiprecision::cpp_rational;

template <class Scalar>
double to_double(const Scalar& v) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return static_cast<double>(v);
  } else {
    return v.template convert_to<double>();
  }
}

template <class Scalar>
Scalar abs_value(const Scalar& v) {
  return v < Scalar(0) ? Scalar(-v) : v;
}

/// Finite-support variable. cpt[env][config][j] = P(support[j] | parents in
/// configuration `config`), configurations enumerated in mixed radix over the
/// parents' supports with the first parent most significant.
template <class Scalar>
struct DiscreteVariable {
  std::string name;
  std::vector<Scalar> support;
  IndexList parents;
  std::vector<std::vector<std::vector<Scalar>>> cpt;
};

/// Discrete structural causal model over environments. Variables are listed
/// in topological order. X_k (`k`) follows X_k = g(PA) + noise with an
/// environment-constant table g over its parents' configurations.
template <class Scalar>
struct ScmSpec {
  std::vector<DiscreteVariable<Scalar>> variables;
  int env_count = 1;
  int y = 0;
  int k = 1;
  IndexList r;  // parents of X_k other than Y
  IndexList q;  // further conditioning variables
  std::vector<Scalar> g;
  std::vector<Scalar> noise_values;
  std::vector<Scalar> noise_weights;

  /// S = R u Q, ascending.
  IndexList s() const {
    IndexList out = r;
    out.insert(out.end(), q.begin(), q.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  double atom_count() const {
    double n = 1.0;
    for (const auto& v : variables) n *= static_cast<double>(v.support.size());
    return n;
  }
};

template <class Scalar>
int config_count(const ScmSpec<Scalar>& spec, const IndexList& parents) {
  int n = 1;
  for (int p : parents) n *= static_cast<int>(spec.variables[static_cast<std::size_t>(p)].support.size());
  return n;
}

/// Mixed-radix configuration index of `parents` under `state` (support indices).
template <class Scalar>
int config_index(const ScmSpec<Scalar>& spec, const IndexList& parents, const std::vector<int>& state) {
  int idx = 0;
  for (int p : parents) {
    idx = idx * static_cast<int>(spec.variables[static_cast<std::size_t>(p)].support.size()) +
          state[static_cast<std::size_t>(p)];
  }
  return idx;
}

/// True when `b` is reachable from `a` along parent -> child edges.
template <class Scalar>
bool is_descendant(const ScmSpec<Scalar>& spec, int a, int b) {
  std::vector<char> reach(spec.variables.size(), 0);
  reach[static_cast<std::size_t>(a)] = 1;
  for (std::size_t v = static_cast<std::size_t>(a) + 1; v < spec.variables.size(); ++v)
    for (int p : spec.variables[v].parents)
      if (reach[static_cast<std::size_t>(p)]) reach[v] = 1;
  return b != a && reach[static_cast<std::size_t>(b)];
}

/// Builds X_k's variable from an additive mechanism; the CPT is the same in
/// every environment.
template <class Scalar>
DiscreteVariable<Scalar> additive_variable(const ScmSpec<Scalar>& spec, std::string name, IndexList parents) {
  DiscreteVariable<Scalar> var;
  var.name = std::move(name);
  var.parents = std::move(parents);
  const int configs = config_count(spec, var.parents);
  require(static_cast<int>(spec.g.size()) == configs, ErrorKind::validation, "additive_variable: g has the wrong size");
  require(spec.noise_values.size() == spec.noise_weights.size() && !spec.noise_values.empty(), ErrorKind::validation,
          "additive_variable: noise values and weights differ in length");
  for (const Scalar& gv : spec.g)
    for (const Scalar& nv : spec.noise_values) var.support.push_back(gv + nv);
  std::sort(var.support.begin(), var.support.end());
  var.support.erase(std::unique(var.support.begin(), var.support.end()), var.support.end());
  std::vector<std::vector<Scalar>> table(static_cast<std::size_t>(configs),
                                         std::vector<Scalar>(var.support.size(), Scalar(0)));
  for (int c = 0; c < configs; ++c) {
    for (std::size_t j = 0; j < spec.noise_values.size(); ++j) {
      const Scalar v = spec.g[static_cast<std::size_t>(c)] + spec.noise_values[j];
      const auto pos = std::lower_bound(var.support.begin(), var.support.end(), v) - var.support.begin();
      table[static_cast<std::size_t>(c)][static_cast<std::size_t>(pos)] += spec.noise_weights[j];
    }
  }
  var.cpt.assign(static_cast<std::size_t>(spec.env_count), table);
  return var;
}

/// Structural checks. With `require_proposition` the spec must also meet the
/// sufficient conditions: PA(X_k) = R u {Y}, mean-zero noise, X_k's CPT
/// identical across environments, Q free of descendants of X_k, R and Q
/// disjoint.
template <class Scalar>
void validate(const ScmSpec<Scalar>& spec, bool require_proposition = true) {
  const int nv = static_cast<int>(spec.variables.size());
  require(nv >= 2 && spec.env_count >= 1, ErrorKind::validation, "ScmSpec: too few variables or environments");
  require(spec.y >= 0 && spec.y < nv && spec.k >= 0 && spec.k < nv && spec.y != spec.k, ErrorKind::validation,
          "ScmSpec: bad Y or X_k index");
  const auto& ysup = spec.variables[static_cast<std::size_t>(spec.y)].support;
  require(ysup.size() == 2 && ysup[0] == Scalar(0) && ysup[1] == Scalar(1), ErrorKind::validation,
          "ScmSpec: Y must have support {0, 1}");
  for (int v = 0; v < nv; ++v) {
    const auto& var = spec.variables[static_cast<std::size_t>(v)];
    require(!var.support.empty() && var.support.size() <= 64, ErrorKind::validation, "ScmSpec: bad support size");
    for (int p : var.parents)
      require(p >= 0 && p < v, ErrorKind::validation, "ScmSpec: parents must precede their children");
    require(static_cast<int>(var.cpt.size()) == spec.env_count, ErrorKind::validation, "ScmSpec: CPT env count");
    const int configs = config_count(spec, var.parents);
    for (const auto& table : var.cpt) {
      require(static_cast<int>(table.size()) == configs, ErrorKind::validation, "ScmSpec: CPT config count");
      for (const auto& row : table) {
        require(row.size() == var.support.size(), ErrorKind::validation, "ScmSpec: CPT row length");
        Scalar total(0);
        for (const Scalar& pr : row) {
          require(!(pr < Scalar(0)), ErrorKind::validation, "ScmSpec: negative probability");
          total += pr;
        }
        if constexpr (std::is_floating_point_v<Scalar>) {
          require(std::abs(static_cast<double>(total) - 1.0) <= 1e-12, ErrorKind::validation,
                  "ScmSpec: CPT row not stochastic in " + var.name);
        } else {
          require(total == Scalar(1), ErrorKind::validation, "ScmSpec: CPT row not stochastic in " + var.name);
        }
      }
    }
  }
  if (!require_proposition) return;
  const auto& xk = spec.variables[static_cast<std::size_t>(spec.k)];
  IndexList expected = spec.r;
  expected.push_back(spec.y);
  std::sort(expected.begin(), expected.end());
  IndexList actual = xk.parents;
  std::sort(actual.begin(), actual.end());
  require(expected == actual, ErrorKind::validation, "ScmSpec: X_k's parents must be R and Y");
  for (std::size_t e = 1; e < xk.cpt.size(); ++e)
    require(xk.cpt[e] == xk.cpt[0], ErrorKind::validation, "ScmSpec: X_k's mechanism varies by environment");
  Scalar noise_mean(0);
  for (std::size_t j = 0; j < spec.noise_values.size(); ++j) noise_mean += spec.noise_values[j] * spec.noise_weights[j];
  require(noise_mean == Scalar(0), ErrorKind::validation, "ScmSpec: noise must have mean zero");
  for (int qv : spec.q) {
    require(qv != spec.k && qv != spec.y, ErrorKind::validation, "ScmSpec: Q must exclude X_k and Y");
    require(!is_descendant(spec, spec.k, qv), ErrorKind::validation, "ScmSpec: Q contains a descendant of X_k");
    require(std::find(spec.r.begin(), spec.r.end(), qv) == spec.r.end(), ErrorKind::validation,
            "ScmSpec: R and Q overlap");
  }
}

/// Exact conditional moments at one support point x_S (support indices).
template <class Scalar>
struct SupportPoint {
  std::vector<int> key;
  Scalar p{0};            // P(X_S = x)
  Scalar e_y{0};          // E[Y | X_S = x]
  Scalar e_k{0};          // E[X_k | X_S = x]
  std::array<Scalar, 2> h{Scalar(0), Scalar(0)};  // E[X_k | X_S = x, Y = y]
  std::array<bool, 2> has_class{false, false};
};

template <class Scalar>
struct OracleResult {
  IndexList s;
  std::vector<Scalar> total_mass;                         // per environment
  std::vector<std::vector<SupportPoint<Scalar>>> points;  // per environment, sorted by key
};

/// Enumerates the joint distribution of every environment by CPT chain
/// products. Throws Error(size) beyond 1e6 atoms.
template <class Scalar>
OracleResult<Scalar> discrete_scm_oracle(const ScmSpec<Scalar>& spec, IndexList s = {}) {
  validate(spec, false);
  if (s.empty()) s = spec.s();
  require(spec.atom_count() <= 1e6, ErrorKind::size, "discrete_scm_oracle: support exceeds 1e6 atoms");
  const std::size_t nv = spec.variables.size();
  OracleResult<Scalar> out;
  out.s = s;

  struct Accum {
    Scalar p{0}, p_y1{0}, xk{0};
    std::array<Scalar, 2> p_y{Scalar(0), Scalar(0)};
    std::array<Scalar, 2> xk_y{Scalar(0), Scalar(0)};
  };

  for (int e = 0; e < spec.env_count; ++e) {
    std::map<std::vector<int>, Accum> acc;
    Scalar mass(0);
    std::vector<int> state(nv, 0);
    std::vector<Scalar> prob(nv + 1, Scalar(1));
    // Depth-first over variables in topological order; zero branches pruned.
    std::vector<int> key(s.size());
    auto visit = [&](auto&& self, std::size_t v) -> void {
      if (v == nv) {
        const Scalar& p = prob[nv];
        mass += p;
        for (std::size_t i = 0; i < s.size(); ++i) key[i] = state[static_cast<std::size_t>(s[i])];
        Accum& a = acc[key];
        const int yv = state[static_cast<std::size_t>(spec.y)];
        const Scalar& xv =
            spec.variables[static_cast<std::size_t>(spec.k)].support[static_cast<std::size_t>(state[static_cast<std::size_t>(spec.k)])];
        a.p += p;
        a.p_y[static_cast<std::size_t>(yv)] += p;
        a.xk += p * xv;
        a.xk_y[static_cast<std::size_t>(yv)] += p * xv;
        return;
      }
      const auto& var = spec.variables[v];
      const auto& row =
          var.cpt[static_cast<std::size_t>(e)][static_cast<std::size_t>(config_index(spec, var.parents, state))];
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (row[j] == Scalar(0)) continue;
        state[v] = static_cast<int>(j);
        prob[v + 1] = prob[v] * row[j];
        self(self, v + 1);
      }
      state[v] = 0;
    };
    visit(visit, 0);

    out.total_mass.push_back(mass);
    std::vector<SupportPoint<Scalar>> pts;
    for (const auto& [k, a] : acc) {
      SupportPoint<Scalar> pt;
      pt.key = k;
      pt.p = a.p;
      pt.e_y = a.p_y[1] / a.p;
      pt.e_k = a.xk / a.p;
      for (std::size_t y = 0; y < 2; ++y) {
        pt.has_class[y] = a.p_y[y] > Scalar(0);
        if (pt.has_class[y]) pt.h[y] = a.xk_y[y] / a.p_y[y];
      }
      pts.push_back(std::move(pt));
    }
    out.points.push_back(std::move(pts));
  }
  return out;
}

template <class Scalar>
struct MatchingCheck {
  /// max |E[X_k|x] - (E[Y|x] (h1 - h0) + h0)| within each environment.
  Scalar decomposition_error{0};
  /// max |ratio with own h - E[Y|x]| within each environment.
  Scalar identity_error{0};
  /// max over environments and points of |h_e(x, y) - h_0(x, y)|.
  Scalar h_spread{0};
  /// max |(E_e[X_k|x] - h_0(x,0)) / (h_0(x,1) - h_0(x,0)) - E_e[Y|x]|: the
  /// reference environment's h used in every other environment.
  Scalar transfer_error{0};
  /// max |sum of joint probabilities - 1|.
  Scalar mass_error{0};
  int points_checked = 0;
  int degenerate_points = 0;
};

template <class Scalar>
MatchingCheck<Scalar> check_matching(const OracleResult<Scalar>& oracle) {
  MatchingCheck<Scalar> out;
  auto bump = [](Scalar& slot, const Scalar& v) {
    if (slot < v) slot = v;
  };
  for (const Scalar& m : oracle.total_mass) bump(out.mass_error, abs_value(Scalar(m - Scalar(1))));
  const auto& ref = oracle.points.front();
  for (std::size_t e = 0; e < oracle.points.size(); ++e) {
    for (const auto& pt : oracle.points[e]) {
      if (!pt.has_class[0] || !pt.has_class[1]) continue;
      ++out.points_checked;
      const Scalar den = pt.h[1] - pt.h[0];
      bump(out.decomposition_error, abs_value(Scalar(pt.e_k - (pt.e_y * den + pt.h[0]))));
      if (den == Scalar(0)) {
        ++out.degenerate_points;
      } else {
        bump(out.identity_error, abs_value(Scalar((pt.e_k - pt.h[0]) / den - pt.e_y)));
      }
      const auto it = std::lower_bound(ref.begin(), ref.end(), pt.key,
                                       [](const SupportPoint<Scalar>& a, const std::vector<int>& k) { return a.key < k; });
      if (it == ref.end() || it->key != pt.key || !it->has_class[0] || !it->has_class[1]) continue;
      bump(out.h_spread, abs_value(Scalar(pt.h[0] - it->h[0])));
      bump(out.h_spread, abs_value(Scalar(pt.h[1] - it->h[1])));
      const Scalar ref_den = it->h[1] - it->h[0];
      if (ref_den == Scalar(0)) continue;
      bump(out.transfer_error, abs_value(Scalar((pt.e_k - it->h[0]) / ref_den - pt.e_y)));
    }
  }
  return out;
}

namespace scm_detail {

template <class Scalar>
std::vector<Scalar> random_row(Rng& rng, std::size_t size, int lo = 1, int hi = 9) {
  std::vector<std::int64_t> w(size);
  std::int64_t total = 0;
  for (auto& v : w) total += (v = rng.uniform_int(lo, hi));
  std::vector<Scalar> row(size);
  for (std::size_t j = 0; j < size; ++j) row[j] = Scalar(w[j]) / Scalar(total);
  return row;
}

template <class Scalar>
DiscreteVariable<Scalar> random_variable(const ScmSpec<Scalar>& spec, Rng& rng, std::string name, int support_size,
                                         IndexList parents) {
  DiscreteVariable<Scalar> var;
  var.name = std::move(name);
  for (int j = 0; j < support_size; ++j) var.support.push_back(Scalar(j));
  var.parents = std::move(parents);
  const int configs = config_count(spec, var.parents);
  var.cpt.resize(static_cast<std::size_t>(spec.env_count));
  for (auto& table : var.cpt)
    for (int c = 0; c < configs; ++c) table.push_back(random_row<Scalar>(rng, var.support.size()));
  return var;
}

// Pair of mean-zero integer noise designs.
template <class Scalar>
void random_noise(ScmSpec<Scalar>& spec, Rng& rng) {
  if (rng.bernoulli(0.5)) {
    const std::int64_t a = rng.uniform_int(1, 4), b = rng.uniform_int(1, 4);
    spec.noise_values = {Scalar(-1), Scalar(0), Scalar(1)};
    spec.noise_weights = {Scalar(a) / Scalar(2 * a + b), Scalar(b) / Scalar(2 * a + b), Scalar(a) / Scalar(2 * a + b)};
  } else {
    spec.noise_values = {Scalar(-2), Scalar(1)};
    spec.noise_weights = {Scalar(1) / Scalar(3), Scalar(2) / Scalar(3)};
  }
}

// Builds A1, A2, W, Y, X_k, C and (optionally) D; returns the index of D or -1.
template <class Scalar>
int build_common(ScmSpec<Scalar>& spec, Rng& rng, bool with_descendant) {
  spec.variables.clear();
  spec.variables.push_back(random_variable(spec, rng, "A1", static_cast<int>(rng.uniform_int(2, 3)), {}));
  spec.variables.push_back(random_variable(spec, rng, "A2", 2, {}));
  spec.variables.push_back(random_variable(spec, rng, "W", static_cast<int>(rng.uniform_int(2, 3)), {0}));
  IndexList y_parents;
  for (int p : {0, 1, 2})
    if (rng.bernoulli(0.6)) y_parents.push_back(p);
  if (y_parents.empty()) y_parents.push_back(0);
  spec.variables.push_back(random_variable(spec, rng, "Y", 2, y_parents));
  spec.y = 3;

  const bool use_r = rng.bernoulli(0.75);
  spec.r = use_r ? IndexList{2} : IndexList{};
  IndexList k_parents = spec.r;
  k_parents.push_back(spec.y);
  const int configs = config_count(spec, k_parents);
  spec.g.assign(static_cast<std::size_t>(configs), Scalar(0));
  // Y is the last parent, so configurations come in (y = 0, y = 1) pairs.
  for (int c = 0; c < configs; c += 2) {
    const std::int64_t g0 = rng.uniform_int(-3, 3);
    std::int64_t shift = rng.uniform_int(1, 3);
    if (rng.bernoulli(0.5)) shift = -shift;
    spec.g[static_cast<std::size_t>(c)] = Scalar(g0);
    spec.g[static_cast<std::size_t>(c + 1)] = Scalar(g0 + shift);
  }
  random_noise(spec, rng);
  spec.variables.push_back(additive_variable(spec, "Xk", k_parents));
  spec.k = 4;
  spec.variables.push_back(random_variable(spec, rng, "C", 2, {1, 3}));
  if (!with_descendant) return -1;
  spec.variables.push_back(random_variable(spec, rng, "D", 2, {4}));
  return 6;
}

}  // namespace scm_detail

/// Random spec meeting the sufficient conditions: Y's mechanism and every
/// other CPT vary by environment, X_k = g(R, Y) + noise does not, Q is a
/// random subset of the non-descendants {A1, A2, W, C} outside R (C is a sibling of X_k
/// through Y) and a descendant D of X_k is present but left out of S.
template <class Scalar>
ScmSpec<Scalar> random_bimp_spec(Rng& rng, int env_count = 3) {
  ScmSpec<Scalar> spec;
  spec.env_count = env_count;
  scm_detail::build_common(spec, rng, true);
  spec.q.clear();
  for (int v : {0, 1, 2, 5})
    if (rng.bernoulli(0.5) && std::find(spec.r.begin(), spec.r.end(), v) == spec.r.end()) spec.q.push_back(v);
  validate(spec, true);
  return spec;
}

/// Violates the independence condition: Q includes a descendant D of X_k
/// whose mechanism flips between environments. P(D = 1 | X_k) rises with the
/// rank of X_k in its support in even environments and falls in odd ones, so
/// D carries information about the noise of X_k within every class.
template <class Scalar>
ScmSpec<Scalar> negative_control_spec(Rng& rng, int env_count = 2) {
  ScmSpec<Scalar> spec;
  spec.env_count = env_count;
  const int d = scm_detail::build_common(spec, rng, true);
  auto& dvar = spec.variables[static_cast<std::size_t>(d)];
  const auto& xk = spec.variables[static_cast<std::size_t>(spec.k)];
  const auto levels = static_cast<std::int64_t>(xk.support.size());
  for (int e = 0; e < env_count; ++e) {
    for (std::int64_t c = 0; c < levels; ++c) {
      const std::int64_t rank = (e % 2) == 1 ? levels - 1 - c : c;
      const Scalar p1 = Scalar(1 + 8 * rank) / Scalar(2 + 8 * (levels - 1));
      dvar.cpt[static_cast<std::size_t>(e)][static_cast<std::size_t>(c)] = {Scalar(1) - p1, p1};
    }
  }
  spec.q = {d};
  validate(spec, false);
  return spec;
}

/// Draws n rows per environment; features are every variable except Y, in
/// spec order. Environments are labelled e0, e1, ... and all are training.
template <class Scalar>
MultiEnvDataset sample_scm(const ScmSpec<Scalar>& spec, int n_per_env, std::uint64_t seed) {
  validate(spec, false);
  const std::size_t nv = spec.variables.size();
  const int n = n_per_env * spec.env_count;
  Matrix x(n, static_cast<Eigen::Index>(nv - 1));
  Eigen::VectorXi y(n);
  std::vector<int> env_of(static_cast<std::size_t>(n));
  std::vector<EnvironmentId> ids;
  std::vector<std::string> names;
  for (std::size_t v = 0; v < nv; ++v)
    if (static_cast<int>(v) != spec.y) names.push_back(spec.variables[v].name);
  int row = 0;
  for (int e = 0; e < spec.env_count; ++e) {
    ids.push_back({"e" + std::to_string(e), EnvRole::train});
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(e)));
    std::vector<int> state(nv, 0);
    for (int i = 0; i < n_per_env; ++i, ++row) {
      for (std::size_t v = 0; v < nv; ++v) {
        const auto& var = spec.variables[v];
        const auto& cpt_row =
            var.cpt[static_cast<std::size_t>(e)][static_cast<std::size_t>(config_index(spec, var.parents, state))];
        const double u = rng.uniform();
        double acc = 0.0;
        std::size_t pick = cpt_row.size() - 1;
        for (std::size_t j = 0; j < cpt_row.size(); ++j) {
          acc += to_double(cpt_row[j]);
          if (u < acc) {
            pick = j;
            break;
          }
        }
        while (to_double(cpt_row[pick]) == 0.0 && pick > 0) --pick;
        state[v] = static_cast<int>(pick);
      }
      int col = 0;
      for (std::size_t v = 0; v < nv; ++v) {
        const double value = to_double(spec.variables[v].support[static_cast<std::size_t>(state[v])]);
        if (static_cast<int>(v) == spec.y) {
          y[row] = static_cast<int>(value);
        } else {
          x(row, col++) = value;
        }
      }
      env_of[static_cast<std::size_t>(row)] = e;
    }
  }
  std::vector<int> groups(names.size());
  for (std::size_t i = 0; i < groups.size(); ++i) groups[i] = static_cast<int>(i);
  return MultiEnvDataset(std::move(x), std::move(y), std::move(env_of), std::move(ids), names, groups, names);
}

/// Converts an exact spec to extended precision.
inline ScmSpec<long double> to_long_double(const ScmSpec<Rational>& spec) {
  ScmSpec<long double> out;
  auto conv = [](const Rational& v) { return v.convert_to<long double>(); };
  out.env_count = spec.env_count;
  out.y = spec.y;
  out.k = spec.k;
  out.r = spec.r;
  out.q = spec.q;
  for (const auto& v : spec.g) out.g.push_back(conv(v));
  for (const auto& v : spec.noise_values) out.noise_values.push_back(conv(v));
  for (const auto& v : spec.noise_weights) out.noise_weights.push_back(conv(v));
  for (const auto& var : spec.variables) {
    DiscreteVariable<long double> nv;
    nv.name = var.name;
    nv.parents = var.parents;
    for (const auto& s : var.support) nv.support.push_back(conv(s));
    for (const auto& table : var.cpt) {
      std::vector<std::vector<long double>> t;
      for (const auto& row : table) {
        std::vector<long double> r;
        for (const auto& p : row) r.push_back(conv(p));
        t.push_back(std::move(r));
      }
      nv.cpt.push_back(std::move(t));
    }
    out.variables.push_back(std::move(nv));
  }
  return out;
}

/// MatchingCheck reported in doubles.
struct MatchingSummary {
  double decomposition_error = 0.0;
  double identity_error = 0.0;
  double h_spread = 0.0;
  double transfer_error = 0.0;
  double mass_error = 0.0;
  int points_checked = 0;
  bool exact = false;  // rational arithmetic was used
};

/// Exact rationals up to 1e4 atoms, long double beyond.
inline MatchingSummary check_matching_auto(const ScmSpec<Rational>& spec) {
  MatchingSummary out;
  auto fill = [&](const auto& c) {
    out.decomposition_error = to_double(c.decomposition_error);
    out.identity_error = to_double(c.identity_error);
    out.h_spread = to_double(c.h_spread);
    out.transfer_error = to_double(c.transfer_error);
    out.mass_error = to_double(c.mass_error);
    out.points_checked = c.points_checked;
  };
  if (spec.atom_count() <= 1e4) {
    out.exact = true;
    fill(check_matching(discrete_scm_oracle(spec)));
  } else {
    fill(check_matching(discrete_scm_oracle(to_long_double(spec))));
  }
  return out;
}

}  // namespace invarbin
