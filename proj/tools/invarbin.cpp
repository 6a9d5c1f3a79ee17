// invarbin command-line driver: simulate, fit-predict, predict, reproduce.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "invarbin/baselines.hpp"
#include "invarbin/csv.hpp"
#include "invarbin/encoding.hpp"
#include "invarbin/error.hpp"
#include "invarbin/experiments.hpp"
#include "invarbin/rng.hpp"
#include "invarbin/serialize.hpp"
#include "invarbin/simgen.hpp"

namespace fs = std::filesystem;
using namespace invarbin;

namespace {

struct CommonFlags {
  double alpha = 0.1;
  std::string variant = "linear";
  int max_subset_size = -1;
  double tau = 0.1;
  double eps_den = 1e-6;
  std::string scope = "env";
  std::vector<std::string> methods = kAllMethods;
  std::uint64_t seed = 1;
  int replicates = 200;
  std::string out = "out";
  bool timing = false;
  bool svg = false;
};

void add_model_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--alpha", f.alpha, "Invariance test level")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--variant", f.variant, "Marginal regressor: linear or gam");
  cmd->add_option("--max-subset-size", f.max_subset_size, "Largest |S| in groups (negative: default cap)");
  cmd->add_option("--tau", f.tau, "Relative slack of the score filter");
  cmd->add_option("--eps-den", f.eps_den, "Degeneracy tolerance relative to sd(X_k)");
  cmd->add_option("--bonferroni-scope", f.scope, "env or env-and-class");
}

void add_method_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--methods", f.methods, "Subset of bimp-linear, bimp-gam, lr, icp")->delimiter(',');
  cmd->add_flag("--timing", f.timing, "Record wall-clock seconds in summaries");
}

ExperimentOptions experiment_options(const CommonFlags& f) {
  require(f.alpha > 0.0 && f.alpha < 1.0, ErrorKind::validation, "--alpha must lie in (0, 1)");
  require(f.tau >= 0.0, ErrorKind::validation, "--tau must be non-negative");
  require(f.eps_den >= 0.0, ErrorKind::validation, "--eps-den must be non-negative");
  ExperimentOptions o;
  o.bimp.alpha = f.alpha;
  o.bimp.variant = variant_from_string(f.variant);
  o.bimp.max_subset_size = f.max_subset_size;
  o.bimp.tau = f.tau;
  o.bimp.eps_den = f.eps_den;
  o.bimp.scope = bonferroni_scope_from_string(f.scope);
  o.methods = parse_methods(f.methods);
  o.timing = f.timing;
  return o;
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorKind::io, "cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

void write_predictions(const fs::path& path, const IndexList& row_ids, const MethodOutput& out) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::io, "cannot write " + path.string());
  write_csv_row(os, {"row_id", "probability", "label", "degenerate_flag"});
  for (Eigen::Index i = 0; i < out.probabilities.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    const bool flag = u < out.flags.size() && out.flags[u];
    write_csv_row(os, {std::to_string(row_ids[u]), format_double(out.probabilities[i]),
                       std::to_string(out.labels[i]), flag ? "1" : "0"});
  }
  require(static_cast<bool>(os), ErrorKind::io, "failed writing " + path.string());
}

void write_aggregate_csv(const fs::path& path, const std::vector<RunSummary>& rows) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::io, "cannot write " + path.string());
  write_csv_row(os, {"method", "runs", "abstention_rate", "accuracy_q1", "accuracy_median", "accuracy_q3", "mse_q1",
                     "mse_median", "mse_q3"});
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const MethodStats& s : aggregate_replicates(rows))
    write_csv_row(os, {s.method, std::to_string(s.runs), format_double(s.abstention_rate), cell(s.accuracy_q1),
                       cell(s.accuracy_median), cell(s.accuracy_q3), cell(s.mse_q1), cell(s.mse_median),
                       cell(s.mse_q3)});
}

// simulate -------------------------------------------------------------------

int cmd_simulate(const CommonFlags& f, int n_per_env, std::optional<int> m) {
  require(f.replicates >= 1, ErrorKind::validation, "--replicates must be at least 1");
  require(n_per_env >= 2, ErrorKind::validation, "--n-per-env must be at least 2");
  const fs::path dir = ensure_dir(f.out);
  Json manifest = Json::array();
  for (int r = 0; r < f.replicates; ++r) {
    SynthConfig cfg;
    cfg.seed = derive_seed(f.seed, static_cast<std::uint64_t>(r));
    cfg.n_per_env = n_per_env;
    cfg.m = m;
    const SynthData data = gen_synthetic(cfg);
    const fs::path rep = f.replicates == 1 ? dir : ensure_dir((dir / ("rep-" + std::to_string(r))).string());
    Json files = Json::array();
    for (int e = 0; e < data.data.env_count(); ++e) {
      const std::string& label = data.data.environments()[static_cast<std::size_t>(e)].label;
      const fs::path p = rep / (label + ".csv");
      write_dataset_csv(data.data.select_rows(data.data.rows_in_env(e)), p.string());
      files.push_back(fs::relative(p, dir).generic_string());
    }
    Json entry = to_json(SynthDrawRecord{r, cfg.seed, data.draw});
    entry["files"] = std::move(files);
    manifest.push_back(std::move(entry));
  }
  write_json((dir / "manifest.json").string(), manifest);
  std::cout << "wrote " << f.replicates << " replicate(s) to " << dir.string() << "\n";
  return 0;
}

// dataset loading ------------------------------------------------------------

struct LoadedData {
  MultiEnvDataset data;
  EncodingSpec spec;
  IndexList test_rows;
  bool test_labelled = true;
};

CsvTable read_tables(const std::vector<std::string>& paths) {
  CsvTable all;
  for (const std::string& p : paths) {
    require(fs::exists(p), ErrorKind::io, "data file not found: " + p);
    CsvTable t = read_csv(p);
    if (all.header.empty()) {
      all.header = t.header;
    } else {
      require(t.header == all.header, ErrorKind::schema, "header of " + p + " differs from the first file");
    }
    for (auto& row : t.rows) all.rows.push_back(std::move(row));
    for (auto line : t.source_lines) all.source_lines.push_back(line);
  }
  return all;
}

// Roles come from a "role" column when present, else from --test-env.
LoadedData load_dataset(const std::vector<std::string>& paths, const std::string& encoding_path,
                        const std::string& env_col, const std::string& response_col, const std::string& test_env) {
  CsvTable table = read_tables(paths);
  require(table.has_column(env_col), ErrorKind::schema, "missing environment column '" + env_col + "'");
  require(table.has_column(response_col), ErrorKind::schema, "missing response column '" + response_col + "'");
  EncodingSpec spec;
  if (!encoding_path.empty()) {
    require(fs::exists(encoding_path), ErrorKind::io, "encoding spec not found: " + encoding_path);
    spec = load_encoding_spec(encoding_path);
  }
  const std::size_t ec = table.column_index(env_col);
  if (spec.env_map.empty()) {
    const bool has_role = table.has_column("role");
    const std::size_t rc = has_role ? table.column_index("role") : 0;
    for (const auto& row : table.rows) {
      if (spec.is_missing(row[ec])) continue;
      const EnvRole role = has_role ? env_role_from_string(row[rc])
                                    : (row[ec] == test_env ? EnvRole::test : EnvRole::train);
      spec.env_map[row[ec]] = role;
    }
  }
  if (spec.columns.empty())
    for (const std::string& c : table.header)
      if (c != env_col && c != response_col && c != "role") spec.columns.push_back(c);
  int tests = 0;
  for (const auto& [label, role] : spec.env_map) tests += role == EnvRole::test;
  require(tests == 1, ErrorKind::validation,
          "exactly one test environment is required (found " + std::to_string(tests) + ")");

  CsvTable train;
  train.header = table.header;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto it = spec.env_map.find(table.rows[i][ec]);
    if (it != spec.env_map.end() && it->second == EnvRole::train) {
      train.rows.push_back(table.rows[i]);
      train.source_lines.push_back(table.source_lines[i]);
    }
  }
  // Test labels may be absent; a placeholder keeps the encoder happy.
  const std::size_t yc = table.column_index(response_col);
  bool labelled = true;
  for (auto& row : table.rows) {
    auto it = spec.env_map.find(row[ec]);
    if (it != spec.env_map.end() && it->second == EnvRole::test && spec.is_missing(row[yc])) {
      labelled = false;
      if (spec.response_map.empty()) row[yc] = "0";
      else row[yc] = spec.response_map.begin()->first;
    }
  }
  spec = resolve_encoding(train, spec, env_col, response_col);
  LoadedData out{encode_table(table, spec, env_col, response_col), spec, {}, labelled};
  out.test_rows = out.data.rows_in_env(test_env_index(out.data));
  return out;
}

// fit-predict ----------------------------------------------------------------

int cmd_fit_predict(const CommonFlags& f, const std::vector<std::string>& data, const std::string& encoding,
                    const std::string& env_col, const std::string& response_col, const std::string& test_env,
                    bool reports) {
  ExperimentOptions options = experiment_options(f);
  options.keep_reports = reports;
  const LoadedData loaded = load_dataset(data, encoding, env_col, response_col, test_env);
  const fs::path dir = ensure_dir(f.out);
  write_json((dir / "encoding.json").string(), Json::parse(nlohmann::json(loaded.spec).dump()));
  const std::vector<MethodOutput> outputs = run_methods(loaded.data, options, "test", 0);
  std::vector<RunSummary> summaries;
  for (const MethodOutput& o : outputs) {
    const std::string& m = o.summary.method;
    write_json((dir / ("model-" + m + ".json")).string(), o.model);
    if (reports && !o.reports.is_null()) write_json((dir / ("reports-" + m + ".json")).string(), o.reports);
    write_predictions(dir / ("predictions-" + m + ".csv"), loaded.test_rows, o);
    RunSummary summary = o.summary;
    if (!loaded.test_labelled) {
      summary.accuracy.reset();
      summary.mse.reset();
    }
    summaries.push_back(summary);
    std::cout << m << ": ";
    if (summary.abstained) std::cout << "abstained";
    else if (!summary.accuracy) std::cout << "predicted (test labels missing)";
    else std::cout << "accuracy " << format_double(*summary.accuracy);
    std::cout << "\n";
  }
  write_summary_csv((dir / "summary.csv").string(), summaries);
  return 0;
}

// predict --------------------------------------------------------------------

int cmd_predict(const std::string& model_path, const std::vector<std::string>& data, const std::string& encoding,
                const std::string& env_col, const std::string& response_col, const std::string& test_env,
                const std::string& out_path) {
  require(fs::exists(model_path), ErrorKind::io, "model not found: " + model_path);
  const Json model = read_json(model_path);
  const std::string enc = encoding.empty() ? (fs::path(model_path).parent_path() / "encoding.json").string() : encoding;
  const LoadedData loaded = load_dataset(data, enc, env_col, response_col, test_env);
  const Matrix xt = test_features(loaded.data);
  MethodOutput out;
  const std::string method = model.value("method", "");
  if (method == "bimp") {
    const EnsembleModel ens = ensemble_from_json(model);
    if (ens.abstained()) {
      std::cout << "model abstained; no predictions\n";
    } else {
      BimpPrediction p = predict_bimp(ens, xt);
      out.probabilities = p.probabilities;
      out.labels = p.labels;
      out.flags = std::move(p.fallback);
    }
  } else if (method == "lr" || method == "icp") {
    if (method == "icp" && (!model.contains("model") || model["model"].is_null())) {
      std::cout << "model abstained; no predictions\n";
    } else {
      const LogisticModel lm = logistic_from_json(method == "icp" ? model["model"] : model);
      Matrix xs(xt.rows(), static_cast<Eigen::Index>(lm.columns.size()));
      for (std::size_t j = 0; j < lm.columns.size(); ++j) xs.col(static_cast<Eigen::Index>(j)) = xt.col(lm.columns[j]);
      out.probabilities = lm.predict_proba(xs);
      out.labels = predict_labels(lm, xs);
    }
  } else {
    fail(ErrorKind::schema, "unrecognised model file (method '" + method + "')");
  }
  const fs::path p(out_path);
  if (p.has_parent_path()) ensure_dir(p.parent_path().string());
  write_predictions(p, loaded.test_rows, out);
  return 0;
}

// reproduce ------------------------------------------------------------------

int cmd_fig1(const CommonFlags& f, bool variant_given, int n_test) {
  const Variant v = variant_given ? variant_from_string(f.variant) : Variant::gam;
  const fs::path dir = ensure_dir(f.out);
  const Fig1Result r = run_fig1(f.seed, n_test, v);
  std::ofstream os(dir / "fig1.csv", std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::io, "cannot write fig1.csv");
  write_csv_row(os, {"x1", "y", "yhat_x3", "yhat_x2", "degenerate_x3", "degenerate_x2"});
  for (Eigen::Index i = 0; i < r.x1.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    write_csv_row(os, {format_double(r.x1[i]), std::to_string(r.y[i]), format_double(r.yhat_x3[i]),
                       format_double(r.yhat_x2[i]), r.degenerate_x3[u] ? "1" : "0", r.degenerate_x2[u] ? "1" : "0"});
  }
  std::ofstream ss(dir / "fig1_accuracy.csv", std::ios::binary);
  write_csv_row(ss, {"pair", "accuracy"});
  write_csv_row(ss, {"(X3,{X1})", format_double(r.accuracy_x3)});
  write_csv_row(ss, {"(X2,{X1})", format_double(r.accuracy_x2)});
  std::cout << "pair (X3,{X1}) accuracy " << format_double(r.accuracy_x3) << "\npair (X2,{X1}) accuracy "
            << format_double(r.accuracy_x2) << "\n";
  return 0;
}

int cmd_fig2(const CommonFlags& f) {
  const ExperimentOptions options = experiment_options(f);
  const fs::path dir = ensure_dir(f.out);
  const Fig2Result r = run_fig2(f.replicates, f.seed, options);
  write_summary_csv((dir / "fig2_replicates.csv").string(), r.summaries);
  write_aggregate_csv(dir / "fig2_aggregate.csv", r.summaries);
  Json draws = Json::array();
  for (const SynthDrawRecord& d : r.draws) draws.push_back(to_json(d));
  write_json((dir / "fig2_draws.json").string(), draws);
  if (f.svg) write_boxplot_svg((dir / "fig2.svg").string(), r.summaries, options.methods);
  for (const MethodStats& s : aggregate_replicates(r.summaries))
    std::cout << s.method << ": median accuracy "
              << (s.accuracy_median ? format_double(*s.accuracy_median) : std::string("n/a")) << ", abstention "
              << format_double(s.abstention_rate) << "\n";
  return 0;
}

int cmd_table(const CommonFlags& f, int which, const std::string& data, MissingPolicy missing) {
  ExperimentOptions options = experiment_options(f);
  const fs::path dir = ensure_dir(f.out);
  const std::string name = which == 1 ? "table1" : "table2";
  const std::vector<TableRow> rows =
      which == 1 ? run_table1(data, options, missing) : run_table2(data, options, missing);
  write_accuracy_table((dir / (name + ".csv")).string(), rows, options.methods);
  std::vector<RunSummary> summaries;
  for (const TableRow& row : rows)
    for (const MethodOutput& o : row.outputs) summaries.push_back(o.summary);
  write_summary_csv((dir / (name + "_summary.csv")).string(), summaries);
  for (const TableRow& row : rows) {
    std::cout << row.environment << ":";
    for (const MethodOutput& o : row.outputs) {
      std::cout << " " << o.summary.method << "=";
      if (o.summary.abstained) {
        std::cout << "abstained";
      } else {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *o.summary.accuracy);
        std::cout << buf;
      }
    }
    std::cout << "\n";
  }
  return 0;
}

int exit_code(ErrorKind kind) { return kind == ErrorKind::io ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary invariant matching: simulate, fit, predict and reproduce experiments"};
  app.require_subcommand(1);
  CommonFlags f;

  std::vector<std::string> data;
  std::string encoding, env_col = "env", response_col = "y", test_env = "test", model_path, pred_out;
  int n_per_env = 1000, n_test = 10000, sim_replicates = 1;
  std::optional<int> m;
  bool reports = true;

  auto* sim = app.add_subcommand("simulate", "Generate synthetic multi-environment datasets");
  sim->add_option("--seed", f.seed, "Base seed");
  sim->add_option("--replicates", sim_replicates, "Number of datasets");
  sim->add_option("--n-per-env", n_per_env, "Samples per environment");
  sim->add_option("--m", m, "Number of predictors (default: drawn from 3..7)");
  sim->add_option("--out", f.out, "Output directory");

  auto* fit = app.add_subcommand("fit-predict", "Fit methods on training environments and predict the test one");
  fit->add_option("--data", data, "CSV file(s) with env and response columns")->required();
  fit->add_option("--encoding", encoding, "Encoding spec JSON");
  fit->add_option("--env-column", env_col, "Environment column");
  fit->add_option("--response", response_col, "Response column");
  fit->add_option("--test-env", test_env, "Test environment label when no role column exists");
  fit->add_option("--out", f.out, "Output directory");
  fit->add_flag("!--no-report", reports, "Skip per-pair invariance reports");
  add_model_flags(fit, f);
  add_method_flags(fit, f);

  auto* pred = app.add_subcommand("predict", "Apply a saved model to a dataset's test environment");
  pred->add_option("--model", model_path, "Model JSON written by fit-predict")->required();
  pred->add_option("--data", data, "CSV file(s)")->required();
  pred->add_option("--encoding", encoding, "Encoding spec (default: encoding.json beside the model)");
  pred->add_option("--env-column", env_col, "Environment column");
  pred->add_option("--response", response_col, "Response column");
  pred->add_option("--test-env", test_env, "Test environment label when no role column exists");
  pred->add_option("--out", pred_out, "Predictions CSV path")->required();

  auto* rep = app.add_subcommand("reproduce", "Reproduce a figure or table");
  rep->require_subcommand(1);
  auto* fig1 = rep->add_subcommand("fig1", "Motivating example");
  fig1->add_option("--seed", f.seed, "Seed");
  fig1->add_option("--n-test", n_test, "Test samples");
  fig1->add_option("--variant", f.variant, "Marginal regressor (default gam)");
  fig1->add_option("--out", f.out, "Output directory");
  auto* fig2 = rep->add_subcommand("fig2", "Synthetic replicates");
  fig2->add_option("--seed", f.seed, "Base seed");
  fig2->add_option("--replicates", f.replicates, "Replicate count");
  fig2->add_option("--out", f.out, "Output directory");
  fig2->add_flag("--svg", f.svg, "Also write a box plot");
  add_model_flags(fig2, f);
  add_method_flags(fig2, f);
  std::string adult = "data/adult.data", mushroom = "data/agaricus-lepiota.data";
  MissingPolicy missing = MissingPolicy::drop_row;
  const std::map<std::string, MissingPolicy> missing_names{{"drop-row", MissingPolicy::drop_row},
                                                           {"category", MissingPolicy::missing_as_category}};
  auto* t1 = rep->add_subcommand("table1", "Census experiment");
  t1->add_option("--data", adult, "Path to adult.data");
  t1->add_option("--missing", missing, "Missing values: drop-row or category")
      ->transform(CLI::CheckedTransformer(missing_names));
  t1->add_option("--out", f.out, "Output directory");
  add_model_flags(t1, f);
  add_method_flags(t1, f);
  auto* t2 = rep->add_subcommand("table2", "Mushroom experiment");
  t2->add_option("--data", mushroom, "Path to agaricus-lepiota.data");
  t2->add_option("--missing", missing, "Missing values: drop-row or category")
      ->transform(CLI::CheckedTransformer(missing_names));
  t2->add_option("--out", f.out, "Output directory");
  add_model_flags(t2, f);
  add_method_flags(t2, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      f.replicates = sim_replicates;
      return cmd_simulate(f, n_per_env, m);
    }
    if (*fit) return cmd_fit_predict(f, data, encoding, env_col, response_col, test_env, reports);
    if (*pred) return cmd_predict(model_path, data, encoding, env_col, response_col, test_env, pred_out);
    if (*fig1) return cmd_fig1(f, fig1->count("--variant") > 0, n_test);
    if (*fig2) return cmd_fig2(f);
    if (*t1) return cmd_table(f, 1, adult, missing);
    if (*t2) return cmd_table(f, 2, mushroom, missing);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
