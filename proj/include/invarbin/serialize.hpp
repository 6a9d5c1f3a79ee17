#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "invarbin/baselines.hpp"
#include "invarbin/bimp.hpp"
#include "invarbin/invariance.hpp"
#include "invarbin/regression.hpp"

namespace invarbin {

using Json = nlohmann::ordered_json;

Json to_json(const LinearModel& m);
Json to_json(const AdditiveSplineModel& m);
Json to_json(const LogisticModel& m);
Json to_json(const MarginalModel& m);
Json to_json(const Pair& p, const std::vector<std::string>& names = {});
Json to_json(const InvarianceReport& r, const MultiEnvDataset& d);
Json to_json(const PairModel& m, const std::vector<std::string>& names = {});
/// Members, filter record and screening counts; reports are excluded.
Json to_json(const EnsembleModel& ens, const std::vector<std::string>& names = {});
Json to_json(const IcpResult& icp, const std::vector<std::string>& names = {});

LinearModel linear_from_json(const Json& j);
AdditiveSplineModel spline_from_json(const Json& j);
LogisticModel logistic_from_json(const Json& j);
MarginalModel marginal_from_json(const Json& j);
Pair pair_from_json(const Json& j);
PairModel pair_model_from_json(const Json& j);
EnsembleModel ensemble_from_json(const Json& j);

/// Pretty-printed with a trailing newline; throws Error(io) on failure.
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

}  // namespace invarbin
