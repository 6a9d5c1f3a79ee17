#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "invarbin/error.hpp"
#include "invarbin/evaluation.hpp"
#include "invarbin/rng.hpp"

using namespace invarbin;

namespace {

Eigen::VectorXi ints(std::initializer_list<int> v) {
  Eigen::VectorXi out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (int x : v) out[i++] = x;
  return out;
}

RunSummary run(const std::string& method, int rep, std::optional<double> acc) {
  RunSummary s;
  s.method = method;
  s.environment = "test";
  s.replicate = rep;
  s.accuracy = acc;
  if (acc) s.mse = 1.0 - *acc;
  s.abstained = !acc;
  return s;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("accuracy") {
    CHECK(accuracy(ints({1, 0, 1}), ints({1, 0, 1})) == 1.0);
    CHECK(accuracy(ints({0, 1, 0}), ints({1, 0, 1})) == 0.0);
    CHECK(accuracy(ints({1, 1, 0, 0}), ints({1, 1, 0, 1})) == 0.75);
    CHECK_THROWS_AS(accuracy(ints({1}), ints({1, 0})), Error);
    Rng rng(1);
    Eigen::VectorXi p(50), t(50);
    for (int i = 0; i < 50; ++i) {
      p[i] = rng.bernoulli(0.5);
      t[i] = rng.bernoulli(0.5);
    }
    const Eigen::VectorXi flipped = (1 - p.array()).matrix();
    CHECK(accuracy(p, t) + accuracy(flipped, t) == doctest::Approx(1.0));
  }

  TEST_CASE("mse") {
    Vector p(2);
    p << 1.0, 0.0;
    CHECK(mse(p, ints({1, 0})) == 0.0);
    CHECK(mse(p, ints({0, 1})) == 1.0);
    CHECK(mse(Vector::Constant(4, 0.5), ints({1, 0, 0, 1})) == 0.25);
  }

  TEST_CASE("quantiles") {
    CHECK(quantile({0.2, 0.8, 0.5}, 0.5) == 0.5);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({7.0}, 0.9) == 7.0);
  }

  TEST_CASE("aggregation") {
    std::vector<RunSummary> rows{run("a", 0, 0.2), run("a", 1, 0.5), run("a", 2, 0.8), run("b", 0, std::nullopt),
                                 run("b", 1, std::nullopt), run("c", 0, 0.4)};
    const std::vector<MethodStats> stats = aggregate_replicates(rows);
    REQUIRE(stats.size() == 3);
    CHECK(stats[0].method == "a");
    CHECK(*stats[0].accuracy_median == 0.5);
    CHECK(stats[1].abstention_rate == 1.0);
    CHECK_FALSE(stats[1].accuracy_median.has_value());
    CHECK(*stats[2].accuracy_median == 0.4);
    std::reverse(rows.begin(), rows.end());
    const std::vector<MethodStats> again = aggregate_replicates(rows);
    for (std::size_t i = 0; i < stats.size(); ++i) {
      CHECK(again[i].method == stats[i].method);
      CHECK(again[i].accuracy_median == stats[i].accuracy_median);
      CHECK(again[i].accuracy_q1 == stats[i].accuracy_q1);
    }
  }

  TEST_CASE("summary csv schema") {
    std::ostringstream out;
    write_summary_csv(out, {run("lr", 3, 0.75), run("icp", 3, std::nullopt)});
    const std::string s = out.str();
    CHECK(s.rfind("method,environment,replicate,accuracy,mse,abstained,n_pairs,seconds\n", 0) == 0);
    CHECK(s.find("lr,test,3,0.75,0.25,false,0,\n") != std::string::npos);
    CHECK(s.find("icp,test,3,,,true,0,\n") != std::string::npos);
  }
}
