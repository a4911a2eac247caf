#include "per/io.hpp"

#include "per/error.hpp"

#include <fstream>
#include <sstream>

namespace per {

namespace {

// Runs `f`, converting JSON library errors into InputError with context.
template <class F>
auto guarded(const char* what, F f) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed ") + what + ": " + e.what());
    }
}

struct ParsedVertex {
    std::string name;
    VertexRole role;
};

struct ParsedModel {
    std::vector<std::string> names;
    std::vector<VertexRole> roles;
    std::vector<Edge> edges;
    std::vector<EdgeParams> params;
    std::map<VertexId, std::vector<double>> dist;
    std::map<VertexId, Combiner> combiners;
};

Combiner combiner_from_json(const Json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "invertible") return Combiner::invertible();
        throw InputError("unknown combiner '" + j.get<std::string>() + "'");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "invertible") return Combiner::invertible();
    if (kind == "lossy") return Combiner::lossy(j.at("table").get<std::vector<int>>(), j.at("out_size").get<int>());
    if (kind == "sum_mod") return Combiner::sum_mod(j.at("modulus").get<int>());
    throw InputError("unknown combiner kind '" + kind + "'");
}

ParsedModel parse_model(const Json& j) {
    ParsedModel m;
    const auto& vs = j.at("vertices");
    if (!vs.is_array() || vs.empty()) throw InputError("'vertices' must be a non-empty array");
    const std::size_t n = vs.size();
    m.names.assign(n, "");
    m.roles.assign(n, VertexRole::Proxy);
    std::vector<char> seen(n, 0);
    std::map<std::string, VertexId> by_name;
    for (const auto& v : vs) {
        const auto id = v.at("id").get<long long>();
        if (id < 0 || static_cast<std::size_t>(id) >= n || seen[static_cast<std::size_t>(id)])
            throw InputError("vertex ids must be unique and in [0, " + std::to_string(n) + ")");
        const auto k = static_cast<std::size_t>(id);
        seen[k] = 1;
        m.names[k] = v.at("name").get<std::string>();
        m.roles[k] = parse_role(v.at("role").get<std::string>());
        by_name[m.names[k]] = static_cast<VertexId>(id);
        if (v.contains("dist")) m.dist[static_cast<VertexId>(id)] = v.at("dist").get<std::vector<double>>();
        if (v.contains("combiner")) m.combiners[static_cast<VertexId>(id)] = combiner_from_json(v.at("combiner"));
    }
    auto endpoint = [&](const Json& e) -> VertexId {
        if (e.is_string()) {
            const auto it = by_name.find(e.get<std::string>());
            if (it == by_name.end()) throw InputError("edge names unknown vertex '" + e.get<std::string>() + "'");
            return it->second;
        }
        const auto id = e.get<long long>();
        if (id < 0 || static_cast<std::size_t>(id) >= n) throw InputError("edge endpoint out of range");
        return static_cast<VertexId>(id);
    };
    for (const auto& e : j.value("edges", Json::array())) {
        EdgeParams p;
        Edge edge{};
        if (e.is_array()) {
            if (e.size() != 2 && e.size() != 3) throw InputError("edge arrays are [parent, child] or [parent, child, alpha]");
            edge = {endpoint(e[0]), endpoint(e[1])};
            if (e.size() == 3) p.alpha = e[2].get<double>();
        } else {
            edge = {endpoint(e.at("parent")), endpoint(e.at("child"))};
            p.alpha = e.value("alpha", 1.0);
            if (e.contains("perm")) p.perm = e.at("perm").get<std::vector<int>>();
        }
        m.edges.push_back(edge);
        m.params.push_back(std::move(p));
    }
    return m;
}

Json combiner_json(const Combiner& c) {
    if (c.kind == Combiner::Kind::Invertible) return "invertible";
    if (c.kind == Combiner::Kind::SumMod) return Json{{"kind", "sum_mod"}, {"modulus", c.modulus}};
    return Json{{"kind", "lossy"}, {"table", c.table}, {"out_size", c.out_size}};
}

Json names_of(const Dag& dag, const VertexSet& s) {
    Json a = Json::array();
    for (VertexId v : s) a.push_back(dag.name(v));
    return a;
}

} // namespace

DistributionShiftDiagram dsd_from_json(const Json& j) {
    return guarded("model file", [&] {
        auto m = parse_model(j);
        return DistributionShiftDiagram(Dag(std::move(m.names), std::move(m.edges)), std::move(m.roles));
    });
}

DropoutScm scm_from_json(const Json& j) {
    return guarded("model file", [&] {
        auto m = parse_model(j);
        DistributionShiftDiagram dsd(Dag(std::move(m.names), std::move(m.edges)), std::move(m.roles));
        return DropoutScm(std::move(dsd), std::move(m.params), std::move(m.dist), std::move(m.combiners));
    });
}

bool has_scm_fields(const Json& j) {
    return guarded("model file", [&] {
        for (const auto& v : j.at("vertices"))
            if (v.contains("dist") || v.contains("combiner")) return true;
        for (const auto& e : j.value("edges", Json::array()))
            if ((e.is_array() && e.size() == 3) || (e.is_object() && (e.contains("alpha") || e.contains("perm"))))
                return true;
        return false;
    });
}

Json to_json(const DistributionShiftDiagram& dsd) {
    const auto& g = dsd.dag();
    Json vs = Json::array(), es = Json::array();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto v = static_cast<VertexId>(i);
        vs.push_back({{"id", v}, {"name", g.name(v)}, {"role", std::string(to_string(dsd.role(v)))}});
    }
    for (const auto& e : g.edges()) es.push_back({e.parent, e.child});
    return {{"vertices", vs}, {"edges", es}};
}

Json to_json(const DropoutScm& scm) {
    const auto& g = scm.dag();
    Json vs = Json::array(), es = Json::array();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto v = static_cast<VertexId>(i);
        Json jv{{"id", v}, {"name", g.name(v)}, {"role", std::string(to_string(scm.dsd().role(v)))}};
        if (scm.is_root(v))
            jv["dist"] = scm.root_dist(v);
        else
            jv["combiner"] = combiner_json(scm.combiner(v));
        vs.push_back(jv);
    }
    for (std::size_t k = 0; k < g.edges().size(); ++k) {
        const auto& e = g.edges()[k];
        Json je{{"parent", e.parent}, {"child", e.child}, {"alpha", scm.edge(k).alpha}};
        if (!scm.edge(k).perm.empty()) je["perm"] = scm.edge(k).perm;
        es.push_back(je);
    }
    return {{"vertices", vs}, {"edges", es}};
}

Json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open '" + path + "'");
    try {
        return Json::parse(f);
    } catch (const Json::exception& e) {
        throw InputError("invalid JSON in '" + path + "': " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write '" + path + "'");
    f << text;
}

void write_json_file(const std::string& path, const Json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

SeedSet seeds_from_json(const Json& j) {
    return guarded("seeds file", [&] {
        if (!j.is_object()) throw InputError("seeds must be an object {proxy: class}");
        SeedSet s;
        for (const auto& [k, v] : j.items()) s[k] = parse_proxy_class(v.get<std::string>());
        return s;
    });
}

Json to_json(const SeedSet& seeds) {
    Json j = Json::object();
    for (const auto& [k, v] : seeds) j[k] = std::string(to_string(v));
    return j;
}

Json to_json(const std::vector<Violation>& vs) {
    Json a = Json::array();
    for (const auto& v : vs) a.push_back({{"kind", v.kind}, {"message", v.message}});
    return a;
}

Json to_json(const HiddenPartition& hp, const Dag& dag) {
    return {{"good", names_of(dag, hp.good)}, {"bad", names_of(dag, hp.bad)},
            {"disagreements", names_of(dag, hp.disagreements)}};
}

Json to_json(const ProxyPartition& pp, const Dag& dag) {
    return {{"good", names_of(dag, pp.good)}, {"bad", names_of(dag, pp.bad)}, {"ambiguous", names_of(dag, pp.ambiguous)}};
}

Json to_json(const DependenceGraph& g) {
    auto pairs = [&](const std::vector<std::pair<int, int>>& es) {
        Json a = Json::array();
        for (auto [i, k] : es) a.push_back({g.names[static_cast<std::size_t>(i)], g.names[static_cast<std::size_t>(k)]});
        return a;
    };
    return {{"proxies", g.names}, {"edges", pairs(g.edges)}, {"undetermined", pairs(g.undetermined)}};
}

Json to_json(const LabelState& labels) {
    Json j = Json::object();
    for (const auto& [k, l] : labels) j[k] = std::string(to_string(l.cls));
    return j;
}

Json to_json(const SeedReport& r) {
    Json a = Json::array();
    for (const auto& c : r.conditions) {
        Json jc{{"condition", c.index}, {"passed", c.passed}, {"skipped", c.skipped}, {"witnesses", c.witnesses},
                {"missing", c.missing}};
        if (!c.note.empty()) jc["note"] = c.note;
        a.push_back(jc);
    }
    return {{"passed", r.passed()}, {"conditions", a}};
}

Json to_json(const BoundReport& r) {
    Json j{{"name", r.name}, {"vars", r.vars}, {"skipped", r.skipped}};
    if (r.skipped) {
        j["reason"] = r.reason;
    } else {
        j["lhs"] = r.lhs;
        j["rhs"] = r.rhs;
        j["slack"] = r.slack;
        j["satisfied"] = r.satisfied;
    }
    return j;
}

Json to_json(const MiEstimate& e) {
    Json j{{"valid", e.valid}, {"rows_used", e.rows_used}, {"strata", e.strata}, {"empty_strata", e.empty_strata}};
    j["bits"] = e.valid ? Json(e.bits) : Json(nullptr);
    if (!e.valid) j["reason"] = e.reason;
    return j;
}

Json to_json(const EvalMetrics& m) {
    return {{"accuracy", m.accuracy}, {"f1", m.f1}, {"n", m.n}, {"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
}

Json to_json(const ImprovementReport& r) {
    return {{"pooled_error", r.pooled_error},     {"stratified_error", r.stratified_error},
            {"stratum_errors", r.stratum_errors}, {"stratum_weights", r.stratum_weights},
            {"loss", r.loss},                     {"folds", r.folds},
            {"margin", r.margin},                 {"condition_met", r.condition_met}};
}

Json to_json(const BenchReport& r, bool include_runtime) {
    Json conds = Json::array();
    for (const auto& c : r.conditions) {
        Json methods = Json::array();
        for (const auto& m : c.methods)
            methods.push_back({{"method", m.method},
                               {"accuracy_mean", m.accuracy_mean},
                               {"accuracy_sd", m.accuracy_sd},
                               {"f1_mean", m.f1_mean},
                               {"f1_sd", m.f1_sd},
                               {"accuracy", m.accuracy},
                               {"f1", m.f1}});
        Json jc{{"name", c.name}};
        if (r.kind == "synthetic") {
            jc["sigma_mg"] = c.sigma_mg;
            jc["sigma_mb"] = c.sigma_mb;
        }
        jc["methods"] = methods;
        conds.push_back(jc);
    }
    Json j{{"kind", r.kind}, {"repetitions", r.repetitions}, {"seed", r.seed}, {"conditions", conds}, {"notes", r.notes}};
    if (include_runtime && r.runtime_seconds >= 0) j["runtime_seconds"] = r.runtime_seconds;
    return j;
}

Json to_json(const LinearModel& m) {
    std::vector<int> constant(m.constant.begin(), m.constant.end());
    return {{"features", m.features}, {"weights", m.weights},   {"intercept", m.intercept},
            {"mean", m.mean},         {"scale", m.scale},       {"constant", constant},
            {"intercept_only", m.intercept_only}, {"lambda", m.lambda}, {"sweeps", m.sweeps},
            {"converged", m.converged}, {"objective", m.objective}};
}

LinearModel linear_model_from_json(const Json& j) {
    return guarded("model parameters", [&] {
        LinearModel m;
        m.features = j.at("features").get<std::vector<std::string>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.intercept = j.at("intercept").get<double>();
        m.mean = j.at("mean").get<std::vector<double>>();
        m.scale = j.at("scale").get<std::vector<double>>();
        for (int c : j.value("constant", std::vector<int>(m.features.size(), 0))) m.constant.push_back(c != 0);
        m.intercept_only = j.value("intercept_only", false);
        m.lambda = j.value("lambda", 0.0);
        m.sweeps = j.value("sweeps", 0);
        m.converged = j.value("converged", false);
        m.objective = j.value("objective", 0.0);
        const auto p = m.features.size();
        if (m.weights.size() != p || m.mean.size() != p || m.scale.size() != p || m.constant.size() != p)
            throw InputError("model parameter arrays must match the feature count");
        return m;
    });
}

Json to_json(const IsolationFeatureSet& fs) {
    Json models = Json::array();
    for (const auto& m : fs.models) {
        Json jm{{"y_value", m.y_value}, {"rows", m.rows}, {"degenerate", m.degenerate}};
        if (m.degenerate)
            jm["constant_value"] = m.constant_value;
        else
            jm["model"] = to_json(m.model);
        models.push_back(jm);
    }
    return {{"target", fs.target}, {"source", fs.source}, {"y", fs.y}, {"learner", std::string(to_string(fs.kind))},
            {"lambda", fs.lambda}, {"columns", fs.columns}, {"models", models}};
}

IsolationFeatureSet isolation_from_json(const Json& j) {
    return guarded("isolation model", [&] {
        IsolationFeatureSet fs;
        fs.target = j.at("target").get<std::string>();
        fs.source = j.at("source").get<std::vector<std::string>>();
        fs.y = j.at("y").get<std::string>();
        fs.kind = parse_learner_kind(j.at("learner").get<std::string>());
        if (fs.kind == LearnerSpec::Kind::Auto) throw InputError("stored learner must be linear or logistic");
        fs.lambda = j.value("lambda", 0.0);
        fs.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto& jm : j.at("models")) {
            StratumModel m;
            m.y_value = jm.at("y_value").get<double>();
            m.rows = jm.value("rows", std::size_t{0});
            m.degenerate = jm.value("degenerate", false);
            if (m.degenerate) {
                m.constant_value = jm.at("constant_value").get<double>();
                m.model.features = fs.source;
            } else {
                m.model = linear_model_from_json(jm.at("model"));
            }
            fs.models.push_back(std::move(m));
        }
        if (fs.columns.size() != fs.models.size()) throw InputError("one column name per stratum model is required");
        return fs;
    });
}

LearnerSpec learner_from_json(const Json& j) {
    return guarded("learner spec", [&] {
        LearnerSpec s;
        if (j.is_null()) return s;
        if (j.contains("kind")) s.kind = parse_learner_kind(j.at("kind").get<std::string>());
        s.lambda = j.value("lambda", s.lambda);
        s.min_rows = j.value("min_rows", s.min_rows);
        return s;
    });
}

CiTestOptions ci_options_from_json(const Json& j) {
    return guarded("CI test options", [&] {
        CiTestOptions o;
        if (j.is_null()) return o;
        o.alpha_level = j.value("alpha_level", o.alpha_level);
        o.min_stratum = j.value("min_stratum", o.min_stratum);
        o.bins = j.value("bins", o.bins);
        return o;
    });
}

SyntheticConfig synthetic_config_from_json(const Json& j) {
    return guarded("synthetic config", [&] {
        SyntheticConfig c;
        c.sigma_mg = j.value("sigma_mg", c.sigma_mg);
        c.sigma_mb = j.value("sigma_mb", c.sigma_mb);
        c.noise_sd = j.value("noise_sd", c.noise_sd);
        c.rotation_deg = j.value("rotation_deg", c.rotation_deg);
        c.flip_prob = j.value("flip_prob", c.flip_prob);
        c.n_train = j.value("n_train", c.n_train);
        c.n_test = j.value("n_test", c.n_test);
        c.repetitions = j.value("repetitions", c.repetitions);
        c.seed = j.value("seed", c.seed);
        c.lambda = j.value("lambda", c.lambda);
        validate(c);
        return c;
    });
}

std::vector<Environment> sweep_from_json(const Json& j) {
    return guarded("sweep", [&] {
        if (!j.contains("sweep")) {
            auto a = default_sweep(true), b = default_sweep(false);
            a.insert(a.end(), b.begin() + 1, b.end());
            return a;
        }
        std::vector<Environment> out;
        for (const auto& e : j.at("sweep")) out.push_back({e.at("sigma_mg").get<double>(), e.at("sigma_mb").get<double>()});
        return out;
    });
}

TabularConfig tabular_config_from_json(const Json& j) {
    return guarded("tabular config", [&] {
        TabularConfig c;
        c.train_csv = j.value("train_csv", std::string());
        c.test_csv = j.value("test_csv", std::string());
        c.state = j.value("state", c.state);
        c.education = j.value("education", c.education);
        c.insurance = j.value("insurance", c.insurance);
        c.commute = j.value("commute", c.commute);
        c.income = j.value("income", c.income);
        c.threshold = j.value("threshold", c.threshold);
        c.repetitions = j.value("repetitions", c.repetitions);
        c.train_fraction = j.value("train_fraction", c.train_fraction);
        c.seed = j.value("seed", c.seed);
        c.lambda = j.value("lambda", c.lambda);
        if (j.contains("filters")) {
            c.filters.clear();
            for (const auto& f : j.at("filters")) {
                RowFilter r;
                r.column = f.at("column").get<std::string>();
                const auto op = f.at("op").get<std::string>();
                if (op == ">")
                    r.op = RowFilter::Op::Greater;
                else if (op == ">=")
                    r.op = RowFilter::Op::GreaterEqual;
                else
                    throw InputError("filter op must be '>' or '>='");
                r.value = f.at("value").get<double>();
                c.filters.push_back(r);
            }
        }
        return c;
    });
}

Json error_envelope(int code, const std::string& kind, const std::string& message, const std::string& stage) {
    Json e{{"code", code}, {"kind", kind}, {"message", message}};
    if (!stage.empty()) e["stage"] = stage;
    return {{"error", e}};
}

} // namespace per
