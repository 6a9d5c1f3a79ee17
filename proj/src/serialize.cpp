#include "invarbin/serialize.hpp"

#include <fstream>

#include "invarbin/error.hpp"

namespace invarbin {
namespace {

Json vec(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vec_from(const Json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

std::string_view kind_name(AdditiveTerm::Kind k) {
  switch (k) {
    case AdditiveTerm::Kind::constant: return "constant";
    case AdditiveTerm::Kind::linear: return "linear";
    case AdditiveTerm::Kind::spline: return "spline";
  }
  return "constant";
}

AdditiveTerm::Kind kind_from(const std::string& s) {
  if (s == "constant") return AdditiveTerm::Kind::constant;
  if (s == "linear") return AdditiveTerm::Kind::linear;
  if (s == "spline") return AdditiveTerm::Kind::spline;
  fail(ErrorKind::schema, "unknown spline term kind '" + s + "'");
}

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::schema, std::string(what) + ": " + e.what());
  }
}

}  // namespace

Json to_json(const LinearModel& m) {
  Json j;
  j["type"] = "ols";
  j["columns"] = m.columns;
  j["coefficients"] = vec(m.coefficients);
  return j;
}

Json to_json(const AdditiveSplineModel& m) {
  Json j;
  j["type"] = "spline";
  j["columns"] = m.columns;
  j["lambda"] = m.lambda;
  j["intercept"] = m.intercept;
  Json terms = Json::array();
  for (const AdditiveTerm& t : m.terms) {
    Json tj;
    tj["kind"] = kind_name(t.kind);
    tj["center"] = t.center;
    tj["scale"] = t.scale;
    tj["knots"] = t.knots;
    tj["coefficients"] = vec(t.coefficients);
    terms.push_back(std::move(tj));
  }
  j["terms"] = std::move(terms);
  return j;
}

Json to_json(const LogisticModel& m) {
  Json j;
  j["type"] = "logistic";
  j["columns"] = m.columns;
  j["coefficients"] = vec(m.coefficients);
  j["iterations"] = m.iterations;
  j["gradient_norm"] = m.gradient_norm;
  j["converged"] = m.converged;
  j["diverged"] = m.diverged;
  return j;
}

Json to_json(const MarginalModel& m) {
  return std::visit([](const auto& model) { return to_json(model); }, m);
}

Json to_json(const Pair& p, const std::vector<std::string>& names) {
  Json j;
  j["k"] = p.target;
  j["S"] = p.conditioning;
  if (!names.empty()) j["label"] = to_string(p, names);
  return j;
}

Json to_json(const InvarianceReport& r, const MultiEnvDataset& d) {
  Json j;
  j["pair"] = to_json(r.pair, d.column_names());
  j["verdict"] = to_string(r.verdict);
  if (!r.reason.empty()) j["reason"] = r.reason;
  j["alpha"] = r.alpha;
  j["min_adjusted"] = {r.min_adjusted[0], r.min_adjusted[1]};
  Json cells = Json::array();
  for (const CellPValue& c : r.cells) {
    Json cj;
    cj["environment"] = d.environments()[static_cast<std::size_t>(c.env)].label;
    cj["class"] = c.cls;
    cj["t"] = c.t_statistic;
    cj["p"] = c.raw;
    cj["p_adjusted"] = c.adjusted;
    cells.push_back(std::move(cj));
  }
  j["pvals"] = std::move(cells);
  return j;
}

Json to_json(const PairModel& m, const std::vector<std::string>& names) {
  Json j;
  j["pair"] = to_json(m.pair, names);
  j["variant"] = to_string(m.variant);
  j["eps_den"] = m.eps_den;
  j["h0"] = to_json(m.h0);
  j["h1"] = to_json(m.h1);
  j["marginal"] = to_json(m.marginal);
  return j;
}

Json to_json(const EnsembleModel& ens, const std::vector<std::string>& names) {
  Json j;
  j["method"] = "bimp";
  j["abstained"] = ens.abstained();
  j["base_rate"] = ens.base_rate;
  j["pairs_tested"] = ens.pairs_tested;
  j["pairs_accepted"] = ens.pairs_accepted;
  j["pairs_skipped"] = ens.pairs_skipped;
  j["pairs_degenerate"] = ens.pairs_degenerate;
  Json filter;
  filter["tau"] = ens.tau;
  filter["threshold"] = ens.score_threshold;
  Json scored = Json::array();
  for (std::size_t i = 0; i < ens.candidates.size(); ++i) {
    Json s = to_json(ens.candidates[i], names);
    s["score"] = ens.scores[i];
    scored.push_back(std::move(s));
  }
  filter["scores"] = std::move(scored);
  j["score_filter"] = std::move(filter);
  Json members = Json::array();
  for (const PairModel& m : ens.members) members.push_back(to_json(m, names));
  j["members"] = std::move(members);
  return j;
}

Json to_json(const IcpResult& icp, const std::vector<std::string>& names) {
  Json j;
  j["method"] = "icp";
  j["alpha"] = icp.alpha;
  j["residual"] = icp.residual == IcpResidual::pearson ? "pearson" : "deviance";
  j["abstained"] = icp.abstained();
  Json tested = Json::array();
  for (const IcpSetResult& s : icp.tested) {
    Json sj;
    sj["S"] = s.columns;
    if (!names.empty()) {
      Json labels = Json::array();
      for (int c : s.columns) labels.push_back(names[static_cast<std::size_t>(c)]);
      sj["labels"] = std::move(labels);
    }
    sj["p_adjusted"] = s.p_value;
    sj["verdict"] = s.accepted ? "accepted" : "rejected";
    tested.push_back(std::move(sj));
  }
  j["sets"] = std::move(tested);
  j["intersection"] = icp.intersection;
  if (icp.model) j["model"] = to_json(*icp.model);
  return j;
}

LinearModel linear_from_json(const Json& j) {
  return guarded("LinearModel", [&] {
    LinearModel m;
    m.columns = j.at("columns").get<IndexList>();
    m.coefficients = vec_from(j.at("coefficients"));
    require(m.coefficients.size() >= 1, ErrorKind::schema, "LinearModel: empty coefficients");
    return m;
  });
}

AdditiveSplineModel spline_from_json(const Json& j) {
  return guarded("AdditiveSplineModel", [&] {
    AdditiveSplineModel m;
    m.columns = j.at("columns").get<IndexList>();
    m.lambda = j.at("lambda").get<double>();
    m.intercept = j.at("intercept").get<double>();
    for (const Json& tj : j.at("terms")) {
      AdditiveTerm t;
      t.kind = kind_from(tj.at("kind").get<std::string>());
      t.center = tj.at("center").get<double>();
      t.scale = tj.at("scale").get<double>();
      t.knots = tj.at("knots").get<std::vector<double>>();
      t.coefficients = vec_from(tj.at("coefficients"));
      require(t.coefficients.size() == t.basis_size(), ErrorKind::schema, "spline term coefficient count");
      m.terms.push_back(std::move(t));
    }
    return m;
  });
}

LogisticModel logistic_from_json(const Json& j) {
  return guarded("LogisticModel", [&] {
    LogisticModel m;
    m.columns = j.at("columns").get<IndexList>();
    m.coefficients = vec_from(j.at("coefficients"));
    m.iterations = j.value("iterations", 0);
    m.gradient_norm = j.value("gradient_norm", 0.0);
    m.converged = j.value("converged", false);
    m.diverged = j.value("diverged", false);
    return m;
  });
}

MarginalModel marginal_from_json(const Json& j) {
  const std::string type = guarded("marginal", [&] { return j.at("type").get<std::string>(); });
  if (type == "ols") return linear_from_json(j);
  if (type == "spline") return spline_from_json(j);
  fail(ErrorKind::schema, "unknown marginal model type '" + type + "'");
}

Pair pair_from_json(const Json& j) {
  return guarded("Pair", [&] {
    Pair p;
    p.target = j.at("k").get<int>();
    p.conditioning = j.at("S").get<IndexList>();
    return p;
  });
}

PairModel pair_model_from_json(const Json& j) {
  return guarded("PairModel", [&] {
    PairModel m;
    m.pair = pair_from_json(j.at("pair"));
    m.variant = variant_from_string(j.at("variant").get<std::string>());
    m.eps_den = j.at("eps_den").get<double>();
    m.h0 = linear_from_json(j.at("h0"));
    m.h1 = linear_from_json(j.at("h1"));
    m.marginal = marginal_from_json(j.at("marginal"));
    return m;
  });
}

EnsembleModel ensemble_from_json(const Json& j) {
  return guarded("EnsembleModel", [&] {
    EnsembleModel ens;
    ens.base_rate = j.at("base_rate").get<double>();
    ens.pairs_tested = j.value("pairs_tested", 0);
    ens.pairs_accepted = j.value("pairs_accepted", 0);
    ens.pairs_skipped = j.value("pairs_skipped", 0);
    ens.pairs_degenerate = j.value("pairs_degenerate", 0);
    const Json& filter = j.at("score_filter");
    ens.tau = filter.at("tau").get<double>();
    ens.score_threshold = filter.at("threshold").get<double>();
    for (const Json& s : filter.at("scores")) {
      ens.candidates.push_back(pair_from_json(s));
      ens.scores.push_back(s.at("score").get<double>());
    }
    for (const Json& m : j.at("members")) ens.members.push_back(pair_model_from_json(m));
    return ens;
  });
}

void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path);
  out << j.dump(2) << '\n';
  require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path);
}

Json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, path + ": " + e.what());
  }
}

}  // namespace invarbin
