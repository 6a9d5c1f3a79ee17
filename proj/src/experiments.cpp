#include "invarbin/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "invarbin/baselines.hpp"
#include "invarbin/csv.hpp"
#include "invarbin/encoding.hpp"
#include "invarbin/error.hpp"
#include "invarbin/rng.hpp"

namespace invarbin {

std::vector<std::string> parse_methods(const std::vector<std::string>& names) {
  std::set<std::string> wanted;
  for (const std::string& n : names) {
    require(std::find(kAllMethods.begin(), kAllMethods.end(), n) != kAllMethods.end(), ErrorKind::validation,
            "unknown method '" + n + "' (expected bimp-linear, bimp-gam, lr, icp)");
    wanted.insert(n);
  }
  require(!wanted.empty(), ErrorKind::validation, "no methods requested");
  std::vector<std::string> out;
  for (const std::string& m : kAllMethods)
    if (wanted.count(m)) out.push_back(m);
  return out;
}

Matrix test_features(const MultiEnvDataset& d) {
  const IndexList rows = d.rows_in_env(test_env_index(d));
  Matrix x(static_cast<Eigen::Index>(rows.size()), d.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = d.features().row(rows[i]);
  return x;
}

Eigen::VectorXi test_labels(const MultiEnvDataset& d) {
  const IndexList rows = d.rows_in_env(test_env_index(d));
  Eigen::VectorXi y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y[static_cast<Eigen::Index>(i)] = d.response()[rows[i]];
  return y;
}

std::vector<MethodOutput> run_methods(const MultiEnvDataset& d, const ExperimentOptions& options,
                                      const std::string& environment, int replicate) {
  const Matrix xt = test_features(d);
  const Eigen::VectorXi yt = test_labels(d);
  std::vector<MethodOutput> outputs;
  for (const std::string& method : parse_methods(options.methods)) {
    const auto start = std::chrono::steady_clock::now();
    MethodOutput out;
    out.summary.method = method;
    out.summary.environment = environment;
    out.summary.replicate = replicate;
    auto score = [&](const Vector& prob, const Eigen::VectorXi& labels) {
      out.probabilities = prob;
      out.labels = labels;
      out.summary.accuracy = accuracy(labels, yt);
      out.summary.mse = mse(prob, yt);
    };
    if (method == "bimp-linear" || method == "bimp-gam") {
      BimpOptions bo = options.bimp;
      bo.variant = method == "bimp-linear" ? Variant::linear : Variant::gam;
      const EnsembleModel ens = fit_bimp(d, bo);
      out.model = to_json(ens, d.column_names());
      out.summary.n_pairs = static_cast<int>(ens.members.size());
      if (options.keep_reports) {
        out.reports = Json::array();
        for (const InvarianceReport& r : ens.reports) out.reports.push_back(to_json(r, d));
      }
      if (ens.abstained()) {
        out.summary.abstained = true;
      } else {
        BimpPrediction pred = predict_bimp(ens, xt);
        score(pred.probabilities, pred.labels);
        out.flags = std::move(pred.fallback);
      }
    } else if (method == "lr") {
      const LogisticModel model = fit_lr_baseline(d);
      out.model = to_json(model);
      out.model["method"] = "lr";
      score(model.predict_proba(xt), predict_labels(model, xt));
    } else {
      IcpOptions io;
      io.alpha = options.bimp.alpha;
      io.max_subset_size = options.bimp.max_subset_size;
      io.threads = options.bimp.threads;
      const IcpResult icp = fit_icp(d, io);
      out.model = to_json(icp, d.column_names());
      if (options.keep_reports) out.reports = out.model["sets"];
      out.summary.n_pairs = static_cast<int>(icp.accepted_sets.size());
      if (icp.abstained()) {
        out.summary.abstained = true;
      } else {
        Matrix xs(xt.rows(), static_cast<Eigen::Index>(icp.intersection.size()));
        for (std::size_t j = 0; j < icp.intersection.size(); ++j)
          xs.col(static_cast<Eigen::Index>(j)) = xt.col(icp.intersection[j]);
        score(icp.model->predict_proba(xs), predict_labels(*icp.model, xs));
      }
    }
    if (options.timing)
      out.summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    outputs.push_back(std::move(out));
  }
  return outputs;
}

Fig1Result run_fig1(std::uint64_t seed, int n_test, Variant variant, int n_train) {
  const MotivatingConfig cfg = fig1_config(seed, n_train, n_test);
  const MultiEnvDataset d = gen_motivating(cfg);
  const Matrix xt = test_features(d);
  Fig1Result res;
  res.x1 = xt.col(0);
  res.y = test_labels(d);
  const double base = training_rows(d).response().cast<double>().mean();
  auto run_pair = [&](int target, Vector& yhat, std::vector<char>& degenerate) {
    const PairModel model = fit_pair_model(d, xt, Pair{target, {0}}, variant);
    const PairPrediction p = predict_pair(model, xt);
    yhat = p.values;
    degenerate = p.degenerate;
    Eigen::VectorXi labels(yhat.size());
    for (Eigen::Index i = 0; i < yhat.size(); ++i) {
      const double v = p.degenerate[static_cast<std::size_t>(i)] ? base : yhat[i];
      labels[i] = v >= 0.5 ? 1 : 0;
    }
    return accuracy(labels, res.y);
  };
  res.accuracy_x3 = run_pair(2, res.yhat_x3, res.degenerate_x3);
  res.accuracy_x2 = run_pair(1, res.yhat_x2, res.degenerate_x2);
  return res;
}

Json to_json(const SynthDrawRecord& r) {
  Json j;
  j["replicate"] = r.replicate;
  j["seed"] = r.seed;
  j["m"] = r.draw.m;
  const char* envs[3] = {"train1", "train2", "test"};
  Json beta, mu;
  for (std::size_t e = 0; e < 3; ++e) {
    beta[envs[e]] = r.draw.beta[e];
    mu[envs[e]] = r.draw.mu[e];
  }
  j["beta"] = std::move(beta);
  j["mu"] = std::move(mu);
  j["eta0"] = r.draw.eta0;
  j["eta1"] = r.draw.eta1;
  return j;
}

Fig2Result run_fig2(int replicates, std::uint64_t seed, const ExperimentOptions& options) {
  require(replicates >= 1, ErrorKind::validation, "replicates must be at least 1");
  Fig2Result res;
  for (int r = 0; r < replicates; ++r) {
    SynthConfig cfg;
    cfg.seed = derive_seed(seed, static_cast<std::uint64_t>(r));
    const SynthData data = gen_synthetic(cfg);
    ExperimentOptions local = options;
    if (local.bimp.max_subset_size < 0) local.bimp.max_subset_size = data.draw.m - 1;
    for (MethodOutput& out : run_methods(data.data, local, "test", r)) res.summaries.push_back(out.summary);
    res.draws.push_back({r, cfg.seed, data.draw});
  }
  return res;
}

std::string_view to_string(CensusSplit s) {
  switch (s) {
    case CensusSplit::born_in_us: return "born in US";
    case CensusSplit::overtime: return "overtime";
    case CensusSplit::caucasian: return "caucasian";
  }
  return "born in US";
}

namespace {

const std::vector<std::string>& census_columns() {
  static const std::vector<std::string> cols{
      "age",          "workclass",    "fnlwgt", "education", "education-num", "marital-status", "occupation",
      "relationship", "race",         "sex",    "capital-gain", "capital-loss", "hours-per-week", "native-country",
      "income"};
  return cols;
}

void require_file(const std::string& path, const std::string& what, const std::string& source) {
  if (!std::filesystem::exists(path))
    fail(ErrorKind::io, what + " not found at '" + path + "'. Download it from " + source +
                            " and pass its location with --data.");
}

// Adds an "env" column and encodes with categories taken from training rows.
MultiEnvDataset encode_with_env(CsvTable table, const std::vector<std::string>& env_labels,
                                const std::vector<std::string>& features, const std::string& response,
                                const std::map<std::string, int>& response_map, MissingPolicy missing,
                                const std::vector<std::pair<std::string, EnvRole>>& env_order) {
  table.header.push_back("env");
  for (std::size_t i = 0; i < table.rows.size(); ++i) table.rows[i].push_back(env_labels[i]);

  CsvTable train;
  train.header = table.header;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string& e = env_labels[i];
    for (const auto& [label, role] : env_order)
      if (label == e && role == EnvRole::train) train.rows.push_back(table.rows[i]);
  }
  require(!train.rows.empty(), ErrorKind::validation, "no training rows");

  EncodingSpec spec;
  spec.columns = features;
  spec.missing_policy = missing;
  spec.response_map = response_map;
  for (const auto& [label, role] : env_order) spec.env_map[label] = role;
  spec = resolve_encoding(train, spec, "env", response);
  // env_map is ordered by key; restore the intended registry order.
  MultiEnvDataset d = encode_table(table, spec, "env", response);
  std::vector<EnvironmentId> ids;
  std::vector<int> remap(static_cast<std::size_t>(d.env_count()));
  for (const auto& [label, role] : env_order) ids.push_back({label, role});
  for (int e = 0; e < d.env_count(); ++e) {
    const auto& label = d.environments()[static_cast<std::size_t>(e)].label;
    for (std::size_t j = 0; j < ids.size(); ++j)
      if (ids[j].label == label) remap[static_cast<std::size_t>(e)] = static_cast<int>(j);
  }
  std::vector<int> env_of(d.env_of().size());
  for (std::size_t r = 0; r < env_of.size(); ++r) env_of[r] = remap[static_cast<std::size_t>(d.env_of()[r])];
  return MultiEnvDataset(d.features(), d.response(), std::move(env_of), std::move(ids), d.column_names(),
                         d.column_group(), d.group_names());
}

}  // namespace

MultiEnvDataset load_census(const std::string& path, CensusSplit split, MissingPolicy missing) {
  require_file(path, "census file adult.data", "https://archive.ics.uci.edu/dataset/2/adult");
  CsvReadOptions ro;
  ro.has_header = false;
  ro.column_names = census_columns();
  CsvTable table = read_csv(path, ro);
  // Some copies end with a "|1x3 Cross validator" banner or a period suffix.
  for (auto& row : table.rows)
    if (!row.back().empty() && row.back().back() == '.') row.back().pop_back();

  const std::set<std::string> college{"Bachelors", "Masters", "Prof-school", "Doctorate"};
  const std::size_t edu = table.column_index("education");
  std::string split_col;
  std::string in_label, out_label;
  switch (split) {
    case CensusSplit::born_in_us:
      split_col = "native-country", in_label = "born-in-US", out_label = "born-abroad";
      break;
    case CensusSplit::overtime:
      split_col = "hours-per-week", in_label = "over-40h", out_label = "at-most-40h";
      break;
    case CensusSplit::caucasian:
      split_col = "race", in_label = "white", out_label = "non-white";
      break;
  }
  const std::size_t sc = table.column_index(split_col);
  std::vector<std::string> env(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string& v = row[sc];
    if (v == "?" || v.empty()) continue;  // missing environment: row dropped
    if (college.count(row[edu])) {
      env[i] = "test";
    } else if (split == CensusSplit::born_in_us) {
      env[i] = v == "United-States" ? in_label : out_label;
    } else if (split == CensusSplit::overtime) {
      env[i] = std::stod(v) > 40.0 ? in_label : out_label;
    } else {
      env[i] = v == "White" ? in_label : out_label;
    }
  }
  std::vector<std::string> features;
  for (const std::string& c : census_columns())
    if (c != "education" && c != "fnlwgt" && c != "income" && c != split_col) features.push_back(c);
  return encode_with_env(std::move(table), env, features, "income", {{"<=50K", 0}, {">50K", 1}}, missing,
                         {{in_label, EnvRole::train}, {out_label, EnvRole::train}, {"test", EnvRole::test}});
}

std::string_view to_string(MushroomTest t) { return t == MushroomTest::meadows ? "meadows" : "paths"; }

namespace {

const std::vector<std::string>& mushroom_columns() {
  static const std::vector<std::string> cols{
      "class",       "cap-shape",    "cap-surface",  "cap-color",   "bruises",
      "odor",        "gill-attachment", "gill-spacing", "gill-size", "gill-color",
      "stalk-shape", "stalk-root",   "stalk-surface-above-ring", "stalk-surface-below-ring",
      "stalk-color-above-ring", "stalk-color-below-ring", "veil-type", "veil-color", "ring-number",
      "ring-type",   "spore-print-color", "population", "habitat"};
  return cols;
}

}  // namespace

const std::vector<std::string>& mushroom_feature_columns() {
  static const std::vector<std::string> cols = [] {
    const std::set<std::string> dropped{"class", "habitat", "odor", "stalk-root", "veil-type", "ring-number",
                                        "population"};
    std::vector<std::string> out;
    for (const auto& c : mushroom_columns())
      if (!dropped.count(c)) out.push_back(c);
    return out;
  }();
  return cols;
}

MultiEnvDataset load_mushroom(const std::string& path, MushroomTest test, MissingPolicy missing) {
  require_file(path, "mushroom file agaricus-lepiota.data", "https://archive.ics.uci.edu/dataset/73/mushroom");
  CsvReadOptions ro;
  ro.has_header = false;
  ro.column_names = mushroom_columns();
  CsvTable table = read_csv(path, ro);
  const std::size_t hab = table.column_index("habitat");
  const std::string test_code = test == MushroomTest::meadows ? "m" : "p";
  std::vector<std::string> env(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::string& h = table.rows[i][hab];
    if (h == "g") env[i] = "grasses";
    else if (h == "u") env[i] = "urban";
    else if (h == test_code) env[i] = "test";
  }
  return encode_with_env(std::move(table), env, mushroom_feature_columns(), "class", {{"p", 0}, {"e", 1}}, missing,
                         {{"grasses", EnvRole::train}, {"urban", EnvRole::train}, {"test", EnvRole::test}});
}

std::vector<TableRow> run_table1(const std::string& path, const ExperimentOptions& options, MissingPolicy missing) {
  std::vector<TableRow> rows;
  for (CensusSplit split : kCensusSplits) {
    const MultiEnvDataset d = load_census(path, split, missing);
    rows.push_back({std::string(to_string(split)), run_methods(d, options, std::string(to_string(split)), 0)});
  }
  return rows;
}

std::vector<TableRow> run_table2(const std::string& path, const ExperimentOptions& options, MissingPolicy missing) {
  std::vector<TableRow> rows;
  for (MushroomTest t : {MushroomTest::meadows, MushroomTest::paths}) {
    const MultiEnvDataset d = load_mushroom(path, t, missing);
    rows.push_back({std::string(to_string(t)), run_methods(d, options, std::string(to_string(t)), 0)});
  }
  return rows;
}

void write_accuracy_table(const std::string& path, const std::vector<TableRow>& rows,
                          const std::vector<std::string>& methods) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  std::vector<std::string> header{"environment"};
  header.insert(header.end(), methods.begin(), methods.end());
  write_csv_row(out, header);
  for (const TableRow& row : rows) {
    std::vector<std::string> fields{row.environment};
    for (const std::string& m : methods) {
      std::string cell;
      for (const MethodOutput& o : row.outputs) {
        if (o.summary.method != m || !o.summary.accuracy) continue;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *o.summary.accuracy);
        cell = buf;
      }
      fields.push_back(cell);
    }
    write_csv_row(out, fields);
  }
  require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path);
}

void write_boxplot_svg(const std::string& path, const std::vector<RunSummary>& summaries,
                       const std::vector<std::string>& methods) {
  const double width = 120.0 * static_cast<double>(methods.size()) + 80.0, height = 360.0;
  const double top = 20.0, bottom = 320.0;
  auto ypos = [&](double acc) { return bottom - (bottom - top) * acc; };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int t = 0; t <= 10; t += 2) {
    const double y = ypos(t / 10.0);
    svg << "<line x1=\"50\" x2=\"" << width - 10 << "\" y1=\"" << y << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/><text x=\"10\" y=\"" << y + 4 << "\" font-size=\"11\">" << t / 10.0 << "</text>\n";
  }
  for (std::size_t i = 0; i < methods.size(); ++i) {
    std::vector<double> acc;
    for (const RunSummary& s : summaries)
      if (s.method == methods[i] && s.accuracy) acc.push_back(*s.accuracy);
    const double cx = 90.0 + 120.0 * static_cast<double>(i);
    svg << "<text x=\"" << cx - 35 << "\" y=\"" << height - 15 << "\" font-size=\"12\">" << methods[i] << "</text>\n";
    if (acc.empty()) continue;
    const double q1 = quantile(acc, 0.25), q2 = quantile(acc, 0.5), q3 = quantile(acc, 0.75);
    const double lo = *std::min_element(acc.begin(), acc.end()), hi = *std::max_element(acc.begin(), acc.end());
    svg << "<line x1=\"" << cx << "\" x2=\"" << cx << "\" y1=\"" << ypos(lo) << "\" y2=\"" << ypos(hi)
        << "\" stroke=\"black\"/>\n";
    svg << "<rect x=\"" << cx - 30 << "\" y=\"" << ypos(q3) << "\" width=\"60\" height=\"" << ypos(q1) - ypos(q3)
        << "\" fill=\"#9ecae1\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << cx - 30 << "\" x2=\"" << cx + 30 << "\" y1=\"" << ypos(q2) << "\" y2=\"" << ypos(q2)
        << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
  }
  svg << "</svg>\n";
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  out << svg.str();
}

}  // namespace invarbin
