#include "invarbin/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "invarbin/csv.hpp"
#include "invarbin/error.hpp"

namespace invarbin {

double accuracy(const Eigen::VectorXi& predicted, const Eigen::VectorXi& truth) {
  require(predicted.size() == truth.size(), ErrorKind::validation, "accuracy: length mismatch");
  require(truth.size() > 0, ErrorKind::validation, "accuracy: empty input");
  return static_cast<double>((predicted.array() == truth.array()).count()) / static_cast<double>(truth.size());
}

double mse(const Vector& probabilities, const Eigen::VectorXi& truth) {
  require(probabilities.size() == truth.size(), ErrorKind::validation, "mse: length mismatch");
  require(truth.size() > 0, ErrorKind::validation, "mse: empty input");
  return (probabilities - truth.cast<double>()).squaredNorm() / static_cast<double>(truth.size());
}

double quantile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::validation, "quantile: empty input");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<MethodStats> aggregate_replicates(const std::vector<RunSummary>& summaries) {
  struct Bucket {
    int runs = 0, abstained = 0;
    std::vector<double> acc, err;
  };
  std::map<std::string, Bucket> by_method;
  for (const RunSummary& s : summaries) {
    Bucket& b = by_method[s.method];
    ++b.runs;
    if (s.abstained) {
      ++b.abstained;
      continue;
    }
    if (s.accuracy) b.acc.push_back(*s.accuracy);
    if (s.mse) b.err.push_back(*s.mse);
  }
  std::vector<MethodStats> out;
  for (const auto& [method, b] : by_method) {
    MethodStats st;
    st.method = method;
    st.runs = b.runs;
    st.abstention_rate = static_cast<double>(b.abstained) / static_cast<double>(b.runs);
    if (!b.acc.empty()) {
      st.accuracy_q1 = quantile(b.acc, 0.25);
      st.accuracy_median = quantile(b.acc, 0.5);
      st.accuracy_q3 = quantile(b.acc, 0.75);
    }
    if (!b.err.empty()) {
      st.mse_q1 = quantile(b.err, 0.25);
      st.mse_median = quantile(b.err, 0.5);
      st.mse_q3 = quantile(b.err, 0.75);
    }
    out.push_back(std::move(st));
  }
  return out;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

void write_summary_csv(std::ostream& out, const std::vector<RunSummary>& rows) {
  write_csv_row(out, {"method", "environment", "replicate", "accuracy", "mse", "abstained", "n_pairs", "seconds"});
  for (const RunSummary& r : rows) {
    write_csv_row(out, {r.method, r.environment, std::to_string(r.replicate), opt(r.accuracy), opt(r.mse),
                        r.abstained ? "true" : "false", std::to_string(r.n_pairs), opt(r.seconds)});
  }
}

void write_summary_csv(const std::string& path, const std::vector<RunSummary>& rows) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  write_summary_csv(out, rows);
  require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path);
}

}  // namespace invarbin
