#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
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

int count_rows_starting(const fs::path& csv, const std::string& prefix) {
  std::ifstream in(csv);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) n += line.rfind(prefix, 0) == 0;
  return n;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("invarbin_cli_" + name);
  fs::remove_all(p);
  return p;
}

// Three simulated CSVs sharing a header, as --data arguments.
std::string sim_data(const fs::path& dir) {
  return "--data " + (dir / "train1.csv").string() + " --data " + (dir / "train2.csv").string() + " --data " +
         (dir / "test.csv").string();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate writes one csv per environment and a manifest") {
    const fs::path a = scratch("sim_a"), b = scratch("sim_b");
    REQUIRE(run("simulate --seed 1 --out " + a.string()) == 0);
    REQUIRE(run("simulate --seed 1 --out " + b.string()) == 0);
    for (const char* f : {"train1.csv", "train2.csv", "test.csv", "manifest.json"}) {
      CHECK(fs::exists(a / f));
      CHECK(slurp(a / f) == slurp(b / f));
    }
    const fs::path c = scratch("sim_c");
    REQUIRE(run("simulate --seed 1 --replicates 5 --n-per-env 50 --out " + c.string()) == 0);
    const nlohmann::json manifest = nlohmann::json::parse(slurp(c / "manifest.json"));
    CHECK(manifest.size() == 5);
    CHECK(fs::exists(c / "rep-4" / "test.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
    fs::remove_all(c);
  }

  TEST_CASE("fit-predict and predict") {
    const fs::path sim = scratch("fp_sim"), out = scratch("fp_out");
    REQUIRE(run("simulate --seed 3 --n-per-env 400 --out " + sim.string()) == 0);
    REQUIRE(run("fit-predict " + sim_data(sim) + " --out " + out.string()) == 0);
    const fs::path summary = out / "summary.csv";
    CHECK(count_rows_starting(summary, "bimp-linear,") == 1);
    CHECK(count_rows_starting(summary, "bimp-gam,") == 1);
    CHECK(count_rows_starting(summary, "lr,") == 1);
    CHECK(count_rows_starting(summary, "icp,") == 1);
    CHECK(fs::exists(out / "encoding.json"));
    CHECK(fs::exists(out / "model-lr.json"));
    CHECK(slurp(out / "predictions-lr.csv").rfind("row_id,probability,label,degenerate_flag\n", 0) == 0);

    for (const char* m : {"lr", "bimp-linear"}) {
      const nlohmann::json model = nlohmann::json::parse(slurp(out / ("model-" + std::string(m) + ".json")));
      if (model.value("abstained", false)) continue;
      const fs::path again = out / (std::string("again-") + m + ".csv");
      REQUIRE(run("predict --model " + (out / ("model-" + std::string(m) + ".json")).string() + " " + sim_data(sim) +
                  " --out " + again.string()) == 0);
      CHECK(slurp(again) == slurp(out / ("predictions-" + std::string(m) + ".csv")));
    }

    const fs::path lr_only = scratch("fp_lr");
    REQUIRE(run("fit-predict " + sim_data(sim) + " --methods lr --out " + lr_only.string()) == 0);
    CHECK(count_rows_starting(lr_only / "summary.csv", "lr,") == 1);
    CHECK(count_rows_starting(lr_only / "summary.csv", "bimp") == 0);
    CHECK(count_rows_starting(lr_only / "summary.csv", "icp,") == 0);

    // Unlabelled test rows: predictions are written, accuracy stays blank.
    {
      std::ifstream in(sim / "test.csv");
      std::ofstream out_csv(sim / "test_unlabelled.csv");
      std::string line;
      std::getline(in, line);
      out_csv << line << "\n";
      while (std::getline(in, line)) {
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        fields[2].clear();
        for (std::size_t i = 0; i < fields.size(); ++i) out_csv << (i ? "," : "") << fields[i];
        out_csv << "\n";
      }
    }
    const fs::path unl = scratch("fp_unl");
    REQUIRE(run("fit-predict --data " + (sim / "train1.csv").string() + " --data " + (sim / "train2.csv").string() +
                " --data " + (sim / "test_unlabelled.csv").string() + " --methods lr --out " + unl.string()) == 0);
    CHECK(count_rows_starting(unl / "summary.csv", "lr,test,0,,,false,") == 1);
    CHECK(fs::exists(unl / "predictions-lr.csv"));
    fs::remove_all(unl);

    const fs::path bad = scratch("fp_bad");
    CHECK(run("fit-predict --data " + (sim / "train1.csv").string() + " --data " + (sim / "train2.csv").string() +
              " --out " + bad.string()) != 0);
    CHECK(run("fit-predict --data /nonexistent/x.csv --out " + bad.string()) == 2);
    CHECK(run("fit-predict " + sim_data(sim) + " --alpha 2 --out " + bad.string()) != 0);
    fs::remove_all(sim);
    fs::remove_all(out);
    fs::remove_all(lr_only);
    fs::remove_all(bad);
  }

  TEST_CASE("reproduce fig2 with a few replicates") {
    const fs::path out = scratch("fig2");
    REQUIRE(run("reproduce fig2 --replicates 3 --out " + out.string()) == 0);
    const fs::path rows = out / "fig2_replicates.csv";
    for (const char* m : {"bimp-linear,", "bimp-gam,", "lr,", "icp,"}) CHECK(count_rows_starting(rows, m) == 3);
    CHECK(fs::exists(out / "fig2_aggregate.csv"));
    fs::remove_all(out);
  }

  TEST_CASE("help and unknown commands") {
    CHECK(run("--help") == 0);
    CHECK(run("frobnicate") != 0);
  }
}
