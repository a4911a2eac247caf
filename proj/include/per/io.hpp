#pragma once

#include "per/bench.hpp"
#include "per/bootstrap.hpp"
#include "per/cis.hpp"
#include "per/dropout_scm.hpp"
#include "per/info.hpp"
#include "per/learn.hpp"

#include <json.hpp>

#include <string>

namespace per {

using Json = nlohmann::ordered_json;

// Model files:
//   {"vertices": [{"id", "name", "role", "dist"?, "combiner"?}],
//    "edges": [[p, c] | [p, c, alpha] | {"parent", "child", "alpha"?, "perm"?}]}
// Edge endpoints are vertex ids or names. "combiner" is "invertible",
// {"kind": "lossy", "table", "out_size"} or {"kind": "sum_mod", "modulus"}.
// All parse functions throw InputError on malformed input.
DistributionShiftDiagram dsd_from_json(const Json& j);
DropoutScm scm_from_json(const Json& j);
// True when the file carries any distribution, combiner or edge parameter.
bool has_scm_fields(const Json& j);
Json to_json(const DistributionShiftDiagram& dsd);
Json to_json(const DropoutScm& scm);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);
void write_text_file(const std::string& path, const std::string& text);

// {"V_G": "good", ...}
SeedSet seeds_from_json(const Json& j);
Json to_json(const SeedSet& seeds);

Json to_json(const std::vector<Violation>& v);
Json to_json(const HiddenPartition& hp, const Dag& dag);
Json to_json(const ProxyPartition& pp, const Dag& dag);
Json to_json(const DependenceGraph& g);
Json to_json(const LabelState& labels);
Json to_json(const SeedReport& r);
Json to_json(const BoundReport& r);
Json to_json(const MiEstimate& e);
Json to_json(const EvalMetrics& m);
Json to_json(const ImprovementReport& r);
Json to_json(const BenchReport& r, bool include_runtime);

Json to_json(const LinearModel& m);
LinearModel linear_model_from_json(const Json& j);
Json to_json(const IsolationFeatureSet& fs);
IsolationFeatureSet isolation_from_json(const Json& j);

LearnerSpec learner_from_json(const Json& j);
CiTestOptions ci_options_from_json(const Json& j);
SyntheticConfig synthetic_config_from_json(const Json& j);
std::vector<Environment> sweep_from_json(const Json& j);
TabularConfig tabular_config_from_json(const Json& j);

// {"error": {"code", "kind", "message", "stage"?}}
Json error_envelope(int code, const std::string& kind, const std::string& message, const std::string& stage = "");

} // namespace per
