#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "invarbin/experiments.hpp"
#include "invarbin/invariance.hpp"
#include "invarbin/simgen.hpp"

using namespace invarbin;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("simgen") {
  TEST_CASE("noiseless probit is a threshold on X1") {
    MotivatingConfig cfg;
    cfg.sigma = 1e-300;
    cfg.envs = {{"a", EnvRole::train, 1.0, 0.0, 0.0, 1.0, 2000}};
    const MultiEnvDataset d = gen_motivating(cfg);
    for (int i = 0; i < d.rows(); ++i) CHECK(d.response()[i] == (d.features()(i, 0) > 0.0 ? 1 : 0));
  }

  TEST_CASE("empirical posterior matches the probit closed form") {
    MotivatingConfig cfg;
    cfg.seed = 17;
    cfg.envs = {{"a", EnvRole::train, 2.0, 1.0, 0.0, 1.0, 1000000}};
    const MultiEnvDataset d = gen_motivating(cfg);
    for (double x : {-1.0, 0.0, 1.0}) {
      double hits = 0.0, count = 0.0;
      for (int i = 0; i < d.rows(); ++i) {
        if (std::abs(d.features()(i, 0) - x) > 0.05) continue;
        hits += d.response()[i];
        count += 1.0;
      }
      const double closed = phi((2.0 * x + 1.0) / std::sqrt(2.0));
      CHECK(std::abs(hits / count - closed) < 0.01);
      CHECK(std::abs(motivating_posterior(cfg, cfg.envs[0], x) - closed) < 1e-15);
    }
  }

  TEST_CASE("fig1 configuration") {
    const MotivatingConfig cfg = fig1_config(3, 100, 200);
    REQUIRE(cfg.envs.size() == 3);
    CHECK(cfg.envs[0].beta1 == 2.0);
    CHECK(cfg.envs[0].mu2 == 1.0);
    CHECK(cfg.envs[2].role == EnvRole::test);
    const MultiEnvDataset d = gen_motivating(cfg);
    CHECK(d.rows() == 400);
    CHECK(d.cols() == 3);
  }

  TEST_CASE("synthetic design draws") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      SynthConfig cfg;
      cfg.seed = seed;
      const SynthData s = gen_synthetic(cfg);
      CHECK(s.draw.m >= 3);
      CHECK(s.draw.m <= 7);
      CHECK(s.data.cols() == s.draw.m);
      CHECK(s.data.rows() == 3000);
      CHECK(s.data.env_count() == 3);
      for (const auto& beta : s.draw.beta) {
        double sum = 0.0;
        for (double b : beta) sum += b;
        CHECK(std::abs(sum - 1.0) < 1e-12);
      }
    }
  }

  TEST_CASE("collapsed means and fixed beta give balanced classes") {
    SynthConfig cfg;
    cfg.seed = 2;
    cfg.m = 4;
    cfg.mu_ranges = {{{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}}};
    cfg.beta = std::vector<double>{0.5, 0.3, 0.2};
    const SynthData s = gen_synthetic(cfg);
    for (int e = 0; e < 3; ++e) {
      double sum = 0.0;
      const IndexList rows = s.data.rows_in_env(e);
      for (int r : rows) sum += s.data.response()[r];
      const double share = sum / static_cast<double>(rows.size());
      CHECK(share >= 0.35);
      CHECK(share <= 0.65);
    }
  }

  TEST_CASE("the matching pair passes the residual test") {
    int accepted = 0;
    for (std::uint64_t seed = 100; seed < 300; ++seed) {
      SynthConfig cfg;
      cfg.seed = seed;
      const SynthData s = gen_synthetic(cfg);
      Pair full{0, {}};
      for (int c = 1; c < s.draw.m; ++c) full.conditioning.push_back(c);
      accepted += residual_distribution_test(s.data, full).accepted();
    }
    CHECK(accepted >= 160);
  }

  TEST_CASE("equal eta draws") {
    SynthConfig cfg;
    cfg.equal_eta = true;
    const SynthData s = gen_synthetic(cfg);
    CHECK(s.draw.eta0 == s.draw.eta1);
  }

  TEST_CASE("same seed, same bytes") {
    SynthConfig cfg;
    cfg.seed = 12;
    const auto dir = std::filesystem::temp_directory_path() / "invarbin_simgen_test";
    std::filesystem::create_directories(dir);
    write_dataset_csv(gen_synthetic(cfg).data, (dir / "a.csv").string());
    write_dataset_csv(gen_synthetic(cfg).data, (dir / "b.csv").string());
    CHECK(slurp((dir / "a.csv").string()) == slurp((dir / "b.csv").string()));
    cfg.seed = 13;
    write_dataset_csv(gen_synthetic(cfg).data, (dir / "c.csv").string());
    CHECK(slurp((dir / "a.csv").string()) != slurp((dir / "c.csv").string()));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("exported csv loads back") {
    SynthConfig cfg;
    cfg.seed = 3;
    const SynthData s = gen_synthetic(cfg);
    const auto path = std::filesystem::temp_directory_path() / "invarbin_roundtrip.csv";
    write_dataset_csv(s.data, path.string());
    EncodingSpec spec;
    spec.env_map = {{"train1", EnvRole::train}, {"train2", EnvRole::train}, {"test", EnvRole::test}};
    for (const auto& n : s.data.column_names()) spec.columns.push_back(n);
    const MultiEnvDataset d = load_csv(path, spec, "env", "y");
    CHECK(d.rows() == s.data.rows());
    CHECK((d.features() - s.data.features()).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
  }
}
