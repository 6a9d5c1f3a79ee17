// Acceptance checks. Usage: acceptance [N]. Prints one line per criterion.
// Exit 0 when all requested criteria pass, 1 on any failure, 77 when the
// single requested criterion is skipped.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "invarbin/baselines.hpp"
#include "invarbin/discrete_scm.hpp"
#include "invarbin/evaluation.hpp"
#include "invarbin/experiments.hpp"
#include "invarbin/invariance.hpp"
#include "invarbin/regression.hpp"
#include "invarbin/rng.hpp"
#include "invarbin/simgen.hpp"
#include "invarbin/stats.hpp"

using namespace invarbin;
namespace fs = std::filesystem;

namespace {

enum class Outcome { pass, fail, skip };

struct Result {
  Outcome outcome = Outcome::fail;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::string fmt_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

Result verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

// 1 -------------------------------------------------------------------------

Result exact_identity() {
  Timer t;
  Rng rng(2024);
  double identity = 0.0, spread = 0.0, transfer = 0.0;
  int points = 0;
  for (int i = 0; i < 50; ++i) {
    const ScmSpec<Rational> spec = random_bimp_spec<Rational>(rng);
    const MatchingCheck<Rational> c = check_matching(discrete_scm_oracle(spec));
    identity = std::max(identity, to_double(c.identity_error));
    spread = std::max(spread, to_double(c.h_spread));
    transfer = std::max(transfer, to_double(c.transfer_error));
    points += c.points_checked;
  }
  const double secs = t.seconds();
  const bool ok = identity <= 1e-12 && spread <= 1e-12 && transfer <= 1e-12 && points > 0 && secs <= 60.0;
  return verdict(ok, "50 specs, " + std::to_string(points) + " points, identity " + fmt_sci(identity) +
                         ", h spread " + fmt_sci(spread) + ", transfer " + fmt_sci(transfer) + ", " +
                         fmt(secs, 3) + " s");
}

// 2 -------------------------------------------------------------------------

Result negative_control() {
  Rng rng(77);
  double worst = 1e300;
  for (int i = 0; i < 10; ++i) {
    const ScmSpec<Rational> spec = negative_control_spec<Rational>(rng);
    worst = std::min(worst, to_double(check_matching(discrete_scm_oracle(spec)).transfer_error));
  }
  return verdict(worst >= 0.05, "10 specs, smallest max transfer error " + fmt(worst));
}

// 3 -------------------------------------------------------------------------

Result motivating() {
  Timer t;
  const Fig1Result r = run_fig1(1);
  const double secs = t.seconds();
  const MotivatingConfig cfg = fig1_config(1, 5000, 10000);
  int bayes = 0, stale = 0;
  for (Eigen::Index i = 0; i < r.x1.size(); ++i) {
    const int y = r.y[i];
    bayes += (motivating_posterior(cfg, cfg.envs[2], r.x1[i]) >= 0.5 ? 1 : 0) == y;
    stale += (motivating_posterior(cfg, cfg.envs[0], r.x1[i]) >= 0.5 ? 1 : 0) == y;
  }
  const double n = static_cast<double>(r.x1.size());
  const double gap = r.accuracy_x3 - r.accuracy_x2;
  return verdict(gap >= 0.10 && secs <= 30.0,
                 "(3,{1}) " + fmt(r.accuracy_x3) + " vs (2,{1}) " + fmt(r.accuracy_x2) + ", gap " + fmt(gap) +
                     "; oracle test posterior " + fmt(bayes / n) + ", training posterior " + fmt(stale / n) + ", " +
                     fmt(secs, 3) + " s");
}

// 4 -------------------------------------------------------------------------

Result synthetic() {
  Timer t;
  const int replicates = 200;
  const std::uint64_t seed = 1;
  const Fig2Result r = run_fig2(replicates, seed, ExperimentOptions{});
  const double secs = t.seconds();
  // Abstaining runs score the pooled-training majority label.
  std::vector<double> fallback(replicates);
  for (int i = 0; i < replicates; ++i) {
    SynthConfig cfg;
    cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    const SynthData s = gen_synthetic(cfg);
    const int majority = training_rows(s.data).response().cast<double>().mean() >= 0.5 ? 1 : 0;
    const Eigen::VectorXi y = test_labels(s.data);
    fallback[static_cast<std::size_t>(i)] = accuracy(Eigen::VectorXi::Constant(y.size(), majority), y);
  }
  std::map<std::string, std::vector<double>> acc;
  std::map<std::string, int> abstained;
  for (const RunSummary& s : r.summaries) {
    acc[s.method].push_back(s.accuracy ? *s.accuracy : fallback[static_cast<std::size_t>(s.replicate)]);
    abstained[s.method] += s.abstained;
  }
  const double lin = quantile(acc["bimp-linear"], 0.5);
  const double gam = quantile(acc["bimp-gam"], 0.5);
  const double lr = quantile(acc["lr"], 0.5);
  const double icp = quantile(acc["icp"], 0.5);
  const bool ok = lin > lr && lin > icp && lin >= gam - 0.02 && secs <= 900.0;
  return verdict(ok, "medians linear " + fmt(lin) + ", gam " + fmt(gam) + ", lr " + fmt(lr) + ", icp-or-abstention " +
                         fmt(icp) + " (icp abstained " + std::to_string(abstained["icp"]) + "/" +
                         std::to_string(replicates) + "), " + fmt(secs, 4) + " s");
}

// 5 -------------------------------------------------------------------------

Result calibration() {
  int rejected = 0, tested = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    SynthConfig cfg;
    cfg.seed = derive_seed(5, s);
    const SynthData d = gen_synthetic(cfg);
    Pair full{0, {}};
    for (int c = 1; c < d.draw.m; ++c) full.conditioning.push_back(c);
    InvarianceOptions o;
    o.alpha = 0.1;
    const InvarianceReport rep = residual_distribution_test(d.data, full, o);
    if (rep.verdict == Verdict::skipped) continue;
    ++tested;
    rejected += rep.verdict == Verdict::rejected;
  }
  const double rate = tested ? static_cast<double>(rejected) / tested : 1.0;
  return verdict(tested == 200 && rate <= 0.2,
                 std::to_string(rejected) + "/" + std::to_string(tested) + " rejected, rate " + fmt(rate));
}

// 6, 7 ----------------------------------------------------------------------

std::optional<double> method_accuracy(const TableRow& row, const std::string& method) {
  for (const MethodOutput& o : row.outputs)
    if (o.summary.method == method && o.summary.accuracy) return 100.0 * *o.summary.accuracy;
  return std::nullopt;
}

bool method_abstained(const TableRow& row, const std::string& method) {
  for (const MethodOutput& o : row.outputs)
    if (o.summary.method == method) return o.summary.abstained;
  return false;
}

struct Target {
  double linear, gam, lr;
};

// Appends one cell per method; returns false if a target is missed or the
// method abstained.
bool compare_row(const TableRow& row, const Target& target, double tol, std::string& detail) {
  bool ok = true;
  detail += row.environment + " [";
  const std::pair<const char*, double> cells[] = {
      {"bimp-linear", target.linear}, {"bimp-gam", target.gam}, {"lr", target.lr}};
  for (const auto& [method, want] : cells) {
    const std::optional<double> got = method_accuracy(row, method);
    const bool hit = got && std::abs(*got - want) <= tol;
    ok = ok && hit;
    detail += std::string(method) + " " + (got ? fmt(*got, 3) : std::string("abstained")) + "/" + fmt(want, 3) +
              (hit ? "" : "!") + " ";
  }
  detail += "icp " + (method_abstained(row, "icp") ? std::string("abstained")
                                                   : fmt(method_accuracy(row, "icp").value_or(0.0), 3)) +
            "] ";
  return ok;
}

double acc_or(const TableRow& row, const std::string& m) { return method_accuracy(row, m).value_or(-1.0); }

Result census() {
  const std::string path = std::string(INVARBIN_DATA_DIR) + "/adult.data";
  if (!fs::exists(path)) return {Outcome::skip, "dataset missing; place adult.data in data/"};
  Timer t;
  const std::vector<TableRow> rows = run_table1(path, ExperimentOptions{});
  const double secs = t.seconds();
  const Target targets[] = {{85.0, 84.9, 78.2}, {68.4, 59.1, 77.0}, {85.0, 85.2, 78.1}};
  std::string detail;
  bool numeric = rows.size() == 3;
  bool abstain = rows.size() == 3;
  for (std::size_t i = 0; i < rows.size() && i < 3; ++i) {
    numeric = compare_row(rows[i], targets[i], 4.0, detail) && numeric;
    abstain = abstain && method_abstained(rows[i], "icp");
  }
  bool order = rows.size() == 3;
  if (order) {
    order = acc_or(rows[0], "bimp-linear") > acc_or(rows[0], "lr") &&
            acc_or(rows[2], "bimp-linear") > acc_or(rows[2], "lr") &&
            acc_or(rows[1], "lr") > acc_or(rows[1], "bimp-linear") && acc_or(rows[1], "lr") > acc_or(rows[1], "bimp-gam");
  }
  detail += "ordering " + std::string(order ? "ok" : "wrong") + ", icp abstention " + (abstain ? "ok" : "wrong") +
            ", numeric " + (numeric ? "ok" : "missed") + ", " + fmt(secs, 4) + " s";
  return verdict(order && abstain && numeric && secs <= 600.0, detail);
}

Result mushroom() {
  const std::string path = std::string(INVARBIN_DATA_DIR) + "/agaricus-lepiota.data";
  if (!fs::exists(path)) return {Outcome::skip, "dataset missing; place agaricus-lepiota.data in data/"};
  const std::vector<TableRow> rows = run_table2(path, ExperimentOptions{});
  const Target targets[] = {{76.0, 87.5, 46.2}, {88.1, 90.9, 11.8}};
  std::string detail;
  bool numeric = rows.size() == 2, order = rows.size() == 2;
  for (std::size_t i = 0; i < rows.size() && i < 2; ++i) {
    numeric = compare_row(rows[i], targets[i], 6.0, detail) && numeric;
    order = order && acc_or(rows[i], "bimp-gam") > acc_or(rows[i], "bimp-linear") &&
            acc_or(rows[i], "bimp-linear") > acc_or(rows[i], "lr");
  }
  detail += "ordering " + std::string(order ? "ok" : "wrong") + ", numeric " + (numeric ? "ok" : "missed");
  return verdict(order && numeric, detail);
}

// 8 -------------------------------------------------------------------------

// Normal equations with an intercept, Gauss-Jordan in long double.
std::vector<long double> normal_equations(const Matrix& x, const Vector& y) {
  const int p = static_cast<int>(x.cols()) + 1;
  std::vector<std::vector<long double>> a(p, std::vector<long double>(p + 1, 0.0L));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<long double> row(p);
    row[0] = 1.0L;
    for (int j = 1; j < p; ++j) row[j] = x(i, j - 1);
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < p; ++c) a[r][c] += row[r] * row[c];
      a[r][p] += row[r] * y[i];
    }
  }
  for (int c = 0; c < p; ++c) {
    int piv = c;
    for (int r = c + 1; r < p; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (int r = 0; r < p; ++r) {
      if (r == c) continue;
      const long double f = a[r][c] / a[c][c];
      for (int k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<long double> beta(p);
  for (int r = 0; r < p; ++r) beta[r] = a[r][p] / a[r][r];
  return beta;
}

long double t_density(long double x, long double nu) {
  const long double c = std::exp(std::lgamma((nu + 1.0L) / 2.0L) - std::lgamma(nu / 2.0L)) /
                        std::sqrt(nu * 3.14159265358979323846264338327950288L);
  return c * std::pow(1.0L + x * x / nu, -(nu + 1.0L) / 2.0L);
}

double t_quadrature(double t, double nu) {
  const int n = 40000;
  const long double b = std::abs(t), h = b / n;
  long double s = t_density(0.0L, nu) + t_density(b, nu);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0L : 2.0L) * t_density(i * h, nu);
  return static_cast<double>(1.0L - 2.0L * s * h / 3.0L);
}

Result numerics() {
  Rng rng(8);
  double ols_err = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Matrix x(400, 4);
    Vector y(400);
    for (int i = 0; i < 400; ++i) {
      for (int j = 0; j < 4; ++j) x(i, j) = rng.normal(j, 1.0 + j);
      y[i] = 1.5 - x(i, 0) + 0.25 * x(i, 2) + rng.normal();
    }
    const LinearModel m = fit_ols(x, y);
    const std::vector<long double> oracle = normal_equations(x, y);
    for (int j = 0; j < 5; ++j)
      ols_err = std::max(ols_err, static_cast<double>(std::abs(m.coefficients[j] - oracle[static_cast<std::size_t>(j)])));
  }
  double t_err = 0.0;
  for (double df : {1.0, 2.5, 7.0, 30.0, 250.0})
    for (double tv : {0.1, 0.8, 1.96, 3.5, 6.0})
      t_err = std::max(t_err, std::abs(student_t_two_sided(tv, df) - t_quadrature(tv, df)));
  const bool cdf0 = normal_cdf(0.0) == 0.5;
  const std::vector<double> ps{0.25, 0.0625, 0.5};
  const bool bonf = bonferroni_adjust(0.125, 4.0) == 0.5 && bonferroni_adjust(0.3, 5.0) == 1.0 &&
                    bonferroni_combine(ps) == 0.1875 && bonferroni_adjust(0.0, 10.0) == 0.0;
  return verdict(ols_err <= 1e-8 && t_err <= 1e-6 && cdf0 && bonf,
                 "ols " + fmt_sci(ols_err) + ", t p-value " + fmt_sci(t_err) + ", normal_cdf(0) " +
                     (cdf0 ? "exact" : "inexact") + ", bonferroni " + (bonf ? "exact" : "wrong"));
}

// 9 -------------------------------------------------------------------------

int cli(const std::string& args) {
  const std::string cmd = std::string(INVARBIN_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Files under `a` that are missing or differ under `b`.
int differing_files(const fs::path& a, const fs::path& b, int& compared) {
  int bad = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    ++compared;
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) ++bad;
  }
  return bad;
}

Result determinism() {
  const fs::path root = fs::temp_directory_path() / "invarbin_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::pair<std::string, std::function<std::string(const fs::path&)>>> commands{
      {"simulate", [](const fs::path& o) { return "simulate --seed 9 --replicates 2 --out " + o.string(); }},
      {"fit-predict",
       [&](const fs::path& o) {
         const fs::path sim = root / "simulate_a" / "rep-0";
         return "fit-predict --data " + (sim / "train1.csv").string() + " --data " + (sim / "train2.csv").string() +
                " --data " + (sim / "test.csv").string() + " --out " + o.string();
       }},
      {"predict",
       [&](const fs::path& o) {
         const fs::path sim = root / "simulate_a" / "rep-0";
         fs::create_directories(o);
         return "predict --model " + (root / "fit-predict_a" / "model-lr.json").string() + " --data " +
                (sim / "train1.csv").string() + " --data " + (sim / "train2.csv").string() + " --data " +
                (sim / "test.csv").string() + " --out " + (o / "predictions.csv").string();
       }},
      {"fig1", [](const fs::path& o) { return "reproduce fig1 --seed 2 --n-test 2000 --out " + o.string(); }},
      {"fig2", [](const fs::path& o) { return "reproduce fig2 --replicates 3 --svg --out " + o.string(); }},
  };
  int compared = 0, bad = 0, failed = 0;
  for (const auto& [name, make] : commands) {
    const fs::path a = root / (name + "_a"), b = root / (name + "_b");
    failed += cli(make(a)) != 0;
    failed += cli(make(b)) != 0;
    if (fs::exists(a)) bad += differing_files(a, b, compared);
  }
  fs::remove_all(root);
  return verdict(failed == 0 && bad == 0 && compared > 0,
                 std::to_string(compared) + " files compared across 5 commands, " + std::to_string(bad) +
                     " differ, " + std::to_string(failed) + " command failures");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Result()>> criteria{exact_identity, negative_control, motivating,
                                                      synthetic,      calibration,      census,
                                                      mushroom,       numerics,         determinism};
  std::vector<int> selected;
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::cerr << "usage: acceptance [1-" << criteria.size() << "]\n";
      return 2;
    }
    selected.push_back(n);
  } else {
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) selected.push_back(i);
  }
  bool any_fail = false, any_skip = false;
  for (int n : selected) {
    Result r;
    try {
      r = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      r = {Outcome::fail, std::string("error: ") + e.what()};
    }
    const char* tag = r.outcome == Outcome::pass ? "PASS" : r.outcome == Outcome::fail ? "FAIL" : "SKIP";
    std::cout << "criterion " << n << ": " << tag << " " << r.detail << std::endl;
    any_fail = any_fail || r.outcome == Outcome::fail;
    any_skip = any_skip || r.outcome == Outcome::skip;
  }
  if (any_fail) return 1;
  if (any_skip && selected.size() == 1) return 77;
  return 0;
}
