#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "invarbin/csv.hpp"
#include "invarbin/encoding.hpp"
#include "invarbin/error.hpp"
#include "invarbin/experiments.hpp"

using namespace invarbin;

namespace {

MultiEnvDataset ten_rows() {
  Matrix x(10, 1);
  Eigen::VectorXi y(10);
  std::vector<int> env(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i;
    y[i] = i % 2;
    env[static_cast<std::size_t>(i)] = i < 4 ? 0 : (i < 8 ? 1 : 2);
  }
  return MultiEnvDataset::from_numeric(x, y, env, {{"a", EnvRole::train}, {"b", EnvRole::train}, {"t", EnvRole::test}});
}

std::multiset<std::pair<double, int>> row_multiset(const MultiEnvDataset& d) {
  std::multiset<std::pair<double, int>> out;
  for (int r = 0; r < d.rows(); ++r) out.insert({d.features()(r, 0), d.response()[r]});
  return out;
}

}  // namespace

TEST_SUITE("data_model") {
  TEST_CASE("four-row csv gives two environments") {
    const CsvTable t = parse_csv("env,y,x1,x2\na,0,1.0,2\na,1,2.0,3\nb,0,3.5,1\nb,1,4,0\n");
    const MultiEnvDataset d = encode_table(t, EncodingSpec{}, "env", "y");
    CHECK(d.rows() == 4);
    CHECK(d.cols() == 2);
    CHECK(d.env_count() == 2);
    CHECK(d.features()(2, 0) == doctest::Approx(3.5));
  }

  TEST_CASE("quoted fields and CRLF") {
    const CsvTable t = parse_csv("a,b\r\n\"x,1\",\"he said \"\"hi\"\"\"\r\n");
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][0] == "x,1");
    CHECK(t.rows[0][1] == "he said \"hi\"");
  }

  TEST_CASE("ragged row reports its line") {
    try {
      parse_csv("a,b\n1,2\n3\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 3);
    }
  }

  TEST_CASE("one-hot uses training categories; unseen level is all zeros") {
    const CsvTable t = parse_csv("env,y,c\na,0,red\na,1,blue\nb,0,red\nb,1,green\nt,0,purple\n");
    EncodingSpec spec;
    spec.env_map = {{"a", EnvRole::train}, {"b", EnvRole::train}, {"t", EnvRole::test}};
    CsvTable train = t;
    train.rows.pop_back();
    const EncodingSpec resolved = resolve_encoding(train, spec, "env", "y");
    const MultiEnvDataset d2 = encode_table(t, resolved, "env", "y");
    CHECK(d2.cols() == 2);
    CHECK(d2.features().row(4).squaredNorm() == 0.0);
    CHECK(d2.group_count() == 1);
  }

  TEST_CASE("missing values: drop_row versus missing_as_category") {
    const CsvTable t = parse_csv("env,y,c,x\na,0,?,1\na,1,u,2\nb,0,v,?\nb,1,u,4\n");
    EncodingSpec spec;
    const MultiEnvDataset dropped = encode_table(t, spec, "env", "y");
    CHECK(dropped.rows() == 2);
    spec.missing_policy = MissingPolicy::missing_as_category;
    spec.columns = {"c"};
    const MultiEnvDataset kept = encode_table(t, spec, "env", "y");
    CHECK(kept.rows() == 4);
    CHECK(kept.cols() == 2);
  }

  TEST_CASE("unknown response value is a schema error") {
    const CsvTable t = parse_csv("env,y,x\na,yes,1\nb,no,2\n");
    EncodingSpec spec;
    spec.response_map = {{"yes", 1}};
    CHECK_THROWS_AS(encode_table(t, spec, "env", "y"), Error);
  }

  TEST_CASE("partition sizes and re-concatenation") {
    const MultiEnvDataset d = ten_rows();
    const auto [in, out] = partition_by_env(d, "a");
    CHECK(in.rows() == 4);
    CHECK(out.rows() == 6);
    auto all = row_multiset(in);
    for (const auto& r : row_multiset(out)) all.insert(r);
    CHECK(all == row_multiset(d));
  }

  TEST_CASE("single environment leaves the out-set empty") {
    Matrix x = Matrix::Ones(3, 1);
    const MultiEnvDataset d =
        MultiEnvDataset::from_numeric(x, Eigen::VectorXi::Zero(3), {0, 0, 0}, {{"only", EnvRole::train}});
    CHECK(partition_by_env(d, "only").second.rows() == 0);
  }

  TEST_CASE("class slices") {
    Matrix x = Matrix::Zero(100, 1);
    Eigen::VectorXi y(100);
    for (int i = 0; i < 100; ++i) y[i] = i % 2;
    const MultiEnvDataset d =
        MultiEnvDataset::from_numeric(x, y, std::vector<int>(100, 0), {{"a", EnvRole::train}});
    CHECK(class_slice(d, 0).rows() == 50);
    CHECK(class_slice(d, 1).rows() == 50);
    CHECK(class_slice(class_slice(d, 1), 1).rows() == 50);
    const MultiEnvDataset ones =
        MultiEnvDataset::from_numeric(x, Eigen::VectorXi::Ones(100), std::vector<int>(100, 0), {{"a", EnvRole::train}});
    CHECK(class_slice(ones, 0).rows() == 0);
  }

  TEST_CASE("class_slice commutes with partition_by_env") {
    const MultiEnvDataset d = ten_rows();
    for (const char* label : {"a", "b", "t"}) {
      for (int y = 0; y < 2; ++y) {
        const auto lhs = row_multiset(class_slice(partition_by_env(d, label).first, y));
        const auto rhs = row_multiset(partition_by_env(class_slice(d, y), label).first);
        CHECK(lhs == rhs);
      }
    }
  }

  TEST_CASE("invalid datasets are rejected") {
    Matrix x = Matrix::Zero(2, 1);
    Eigen::VectorXi y(2);
    y << 0, 2;
    CHECK_THROWS_AS(MultiEnvDataset::from_numeric(x, y, {0, 0}, {{"a", EnvRole::train}}), Error);
    CHECK_THROWS_AS(MultiEnvDataset::from_numeric(x, Eigen::VectorXi::Zero(2), {0, 1}, {{"a", EnvRole::train}}), Error);
  }

  TEST_CASE("census drop-row removes exactly the rows holding '?'") {
    const std::string path = std::string(INVARBIN_DATA_DIR) + "/adult.data";
    if (!std::filesystem::exists(path)) {
      MESSAGE("adult.data not present; skipped");
      return;
    }
    std::ifstream in(path);
    std::string line;
    int total = 0, with_missing = 0;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \r") == std::string::npos) continue;
      ++total;
      with_missing += line.find('?') != std::string::npos;
    }
    CHECK(total == 32561);
    const MultiEnvDataset d = load_census(path, CensusSplit::overtime);
    CHECK(d.rows() == total - with_missing);
  }

  TEST_CASE("mushroom column count equals the sum of (levels - 1)") {
    const std::string path = std::string(INVARBIN_DATA_DIR) + "/agaricus-lepiota.data";
    if (!std::filesystem::exists(path)) {
      MESSAGE("agaricus-lepiota.data not present; skipped");
      return;
    }
    const std::vector<std::string> names{
        "class", "cap-shape", "cap-surface", "cap-color", "bruises", "odor", "gill-attachment", "gill-spacing",
        "gill-size", "gill-color", "stalk-shape", "stalk-root", "stalk-surface-above-ring",
        "stalk-surface-below-ring", "stalk-color-above-ring", "stalk-color-below-ring", "veil-type", "veil-color",
        "ring-number", "ring-type", "spore-print-color", "population", "habitat"};
    std::ifstream in(path);
    std::string line;
    std::map<std::string, std::set<std::string>> levels;
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string v; std::getline(ss, v, ',');) f.push_back(v);
      if (f.size() != names.size() || (f.back() != "g" && f.back() != "u")) continue;
      for (std::size_t c = 0; c < names.size(); ++c) levels[names[c]].insert(f[c]);
    }
    int expected = 0;
    for (const std::string& c : mushroom_feature_columns()) expected += static_cast<int>(levels[c].size()) - 1;
    const MultiEnvDataset d = load_mushroom(path, MushroomTest::meadows);
    CHECK(d.cols() == expected);
  }
}
