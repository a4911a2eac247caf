#include "per/bench.hpp"
#include "per/bootstrap.hpp"
#include "per/cis.hpp"
#include "per/dataset.hpp"
#include "per/error.hpp"
#include "per/info.hpp"
#include "per/io.hpp"
#include "per/parallel.hpp"
#include "per/pipeline.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace per;
namespace fs = std::filesystem;

namespace {

struct Global {
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
};

void emit(const Json& j, const std::string& out) {
    if (out.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_json_file(out, j);
}

std::vector<VertexId> ids(const Dag& dag, const Json& names) {
    std::vector<VertexId> out;
    if (names.is_string()) return {dag.id(names.get<std::string>())};
    for (const auto& n : names) out.push_back(dag.id(n.get<std::string>()));
    return out;
}

std::vector<std::string> strings(const Json& j) {
    if (j.is_string()) return {j.get<std::string>()};
    return j.get<std::vector<std::string>>();
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

// ---- validate ----

int cmd_validate(const std::string& model, const std::string& out) {
    const auto dsd = dsd_from_json(read_json_file(model));
    const auto violations = validate_dsd(dsd);
    Json j{{"valid", violations.empty()}, {"violations", to_json(violations)}};
    if (violations.empty()) {
        const auto hp = classify_hidden(dsd);
        j["hidden"] = to_json(hp, dsd.dag());
        j["proxies"] = to_json(classify_proxies(dsd, hp), dsd.dag());
    }
    emit(j, out);
    return violations.empty() ? 0 : 2;
}

// ---- sample ----

struct SampleArgs {
    std::string scm, synthetic, out;
    std::size_t rows = 0;
    bool hidden = false;
};

int cmd_sample(const SampleArgs& a, const Global& g) {
    if (a.scm.empty() == a.synthetic.empty()) throw InputError("give exactly one of --scm or --synthetic");
    Dataset ds;
    if (!a.scm.empty()) {
        ds = sample(scm_from_json(read_json_file(a.scm)), a.rows, g.seed);
    } else {
        const auto j = read_json_file(a.synthetic);
        auto cfg = synthetic_config_from_json(j);
        if (g.seed_set) cfg.seed = g.seed;
        ds = generate_synthetic(cfg, {cfg.sigma_mg, cfg.sigma_mb}, a.rows, cfg.seed);
    }
    if (!a.hidden) {
        std::vector<std::string> keep;
        for (const auto& c : ds.schema())
            if (!c.hidden) keep.push_back(c.name);
        ds = ds.select_columns(keep);
    }
    write_csv(ds, a.out);
    return 0;
}

// ---- info ----

Json run_query(const Json& q, const DropoutScm* scm, const JointTable* t, const Dataset* data) {
    const auto kind = q.at("kind").get<std::string>();
    Json r{{"kind", kind}};
    if (kind == "estimate_mi") {
        if (!data) throw InputError("estimate_mi queries need --data");
        Binning b;
        b.bins = q.value("bins", b.bins);
        const auto z = q.contains("given") ? strings(q.at("given")) : std::vector<std::string>{};
        r["estimate"] = to_json(estimate_mi(*data, strings(q.at("a")), strings(q.at("b")), z, b));
        return r;
    }
    if (!scm) throw InputError("'" + kind + "' queries need --scm");
    const auto& dag = scm->dag();
    const auto given = q.contains("given") ? ids(dag, q.at("given")) : std::vector<VertexId>{};
    double v = 0;
    if (kind == "entropy")
        v = given.empty() ? entropy(*t, ids(dag, q.at("a"))) : conditional_entropy(*t, ids(dag, q.at("a")), given);
    else if (kind == "mi")
        v = given.empty() ? mutual_info(*t, ids(dag, q.at("a")), ids(dag, q.at("b")))
                          : conditional_mi(*t, ids(dag, q.at("a")), ids(dag, q.at("b")), given);
    else if (kind == "interaction")
        v = interaction_info(*t, ids(dag, q.at("a")), ids(dag, q.at("b")), ids(dag, q.at("c")));
    else if (kind == "context_sensitivity")
        v = context_sensitivity(*scm, dag.id(q.at("m").get<std::string>()), ids(dag, q.at("x")));
    else if (kind == "redundancy")
        v = redundancy(*scm, dag.id(q.at("u").get<std::string>()), ids(dag, q.at("x")));
    else if (kind == "closed_form_redundancy")
        v = closed_form_redundancy(*scm, dag.id(q.at("u").get<std::string>()), ids(dag, q.at("x")));
    else if (kind == "closed_form_sensitivity_good")
        v = closed_form_sensitivity_good(*scm, dag.id(q.at("u").get<std::string>()), ids(dag, q.at("x")));
    else if (kind == "closed_form_sensitivity_bad")
        v = closed_form_sensitivity_bad(*scm, dag.id(q.at("u").get<std::string>()), ids(dag, q.at("x")));
    else
        throw InputError("unknown query kind '" + kind + "'");
    r["bits"] = v;
    return r;
}

int cmd_info(const std::string& scm_path, const std::string& data_path, const std::string& queries,
             const std::string& out) {
    const auto qs = read_json_file(queries);
    if (!qs.is_array()) throw InputError("queries must be a JSON array");
    std::optional<DropoutScm> scm;
    JointTable table;
    if (!scm_path.empty()) {
        scm = scm_from_json(read_json_file(scm_path));
        std::vector<VertexId> all(scm->size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<VertexId>(i);
        table = enumerate_joint(*scm, all);
    }
    std::optional<Dataset> data;
    if (!data_path.empty()) data = read_csv(data_path);
    Json results = Json::array();
    for (const auto& q : qs) {
        try {
            results.push_back(run_query(q, scm ? &*scm : nullptr, &table, data ? &*data : nullptr));
        } catch (const Json::exception& e) {
            throw InputError(std::string("malformed query: ") + e.what());
        }
    }
    emit({{"results", results}}, out);
    return 0;
}

// ---- bounds ----

int cmd_bounds(const std::string& scm_path, int subsets, const Global& g, const std::string& out) {
    const auto scm = scm_from_json(read_json_file(scm_path));
    BoundOptions opts;
    opts.subsets = subsets;
    opts.seed = g.seed;
    Json a = Json::array();
    for (const auto& r : check_bounds(scm, opts)) a.push_back(to_json(r));
    emit(a, out);
    return 0;
}

// ---- bootstrap ----

struct BootstrapArgs {
    std::string scm, data, seeds, label, proxies, ci, out;
};

int cmd_bootstrap(const BootstrapArgs& a) {
    if (a.scm.empty() == a.data.empty()) throw InputError("give exactly one of --scm or --data");
    const auto seeds = seeds_from_json(read_json_file(a.seeds));
    Json j;
    if (!a.scm.empty()) {
        const auto model = read_json_file(a.scm);
        const auto dsd = dsd_from_json(model);
        const auto g = dependence_graph_oracle(dsd);
        j["mode"] = "oracle";
        j["labels"] = to_json(bootstrap_labels(g, seeds));
        j["graph"] = to_json(g);
        j["conditions"] = to_json(verify_seed_conditions(dsd, seeds));
    } else {
        const auto ds = read_csv(a.data);
        if (a.label.empty()) throw InputError("--label is required with --data");
        auto proxies = split_list(a.proxies);
        if (proxies.empty())
            for (const auto& n : ds.names())
                if (n != a.label) proxies.push_back(n);
        const auto opts = a.ci.empty() ? CiTestOptions{} : ci_options_from_json(read_json_file(a.ci));
        const auto g = dependence_graph_statistical(ds, a.label, proxies, opts);
        j["mode"] = "statistical";
        j["labels"] = to_json(bootstrap_labels(g, seeds));
        j["graph"] = to_json(g);
        j["conditions"] = nullptr;
    }
    emit(j, a.out);
    return 0;
}

// ---- cis ----

// Column spec: {"target", "source": [...], "label", "learner"?, "folds"?, "margin"?}
int cmd_cis(const std::string& data_path, const std::string& spec_path, const std::string& out_dir, const Global& g) {
    const auto ds = read_csv(data_path);
    const auto spec = read_json_file(spec_path);
    std::string target, label;
    std::vector<std::string> source;
    LearnerSpec learner;
    ImprovementOptions io;
    io.seed = g.seed;
    try {
        target = spec.at("target").get<std::string>();
        source = strings(spec.at("source"));
        label = spec.at("label").get<std::string>();
        if (spec.contains("learner")) learner = learner_from_json(spec.at("learner"));
        io.folds = spec.value("folds", io.folds);
        io.margin = spec.value("margin", io.margin);
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed column spec: ") + e.what());
    }
    const auto fs_ = train_isolation(ds, target, source, label, learner);
    const auto report = check_improvement(ds, target, source, label, learner, io);
    fs::create_directories(out_dir);
    write_csv(emit_features(fs_, ds), (fs::path(out_dir) / "augmented.csv").string());
    write_json_file((fs::path(out_dir) / "improvement.json").string(), to_json(report));
    write_json_file((fs::path(out_dir) / "cis_model.json").string(), to_json(fs_));
    return 0;
}

// ---- bench ----

void write_curves_csv(const BenchReport& r, const std::string& path) {
    std::ostringstream s;
    s.precision(17);
    s << "condition,sigma_mg,sigma_mb,method,accuracy_mean,accuracy_sd,f1_mean,f1_sd\n";
    for (const auto& c : r.conditions)
        for (const auto& m : c.methods)
            s << '"' << c.name << "\"," << c.sigma_mg << ',' << c.sigma_mb << ',' << m.method << ',' << m.accuracy_mean
              << ',' << m.accuracy_sd << ',' << m.f1_mean << ',' << m.f1_sd << '\n';
    write_text_file(path, s.str());
}

int cmd_bench(const std::string& kind, const std::string& config, const std::string& out, const std::string& csv,
              bool timing, const Global& g) {
    const auto j = config.empty() ? Json::object() : read_json_file(config);
    const auto start = std::chrono::steady_clock::now();
    BenchReport rep;
    if (kind == "synthetic") {
        auto cfg = synthetic_config_from_json(j);
        if (g.seed_set) cfg.seed = g.seed;
        rep = run_synthetic_sweep(cfg, sweep_from_json(j));
    } else {
        auto cfg = tabular_config_from_json(j);
        if (g.seed_set) cfg.seed = g.seed;
        const auto dir = j.value("pums_dir", std::string());
        if (!dir.empty())
            rep = run_tabular_states(dir, cfg);
        else if (cfg.train_csv.empty() || cfg.test_csv.empty())
            throw InputError("tabular config needs train_csv and test_csv, or pums_dir");
        else
            rep = run_tabular(cfg);
    }
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    emit(to_json(rep, timing), out);
    if (!csv.empty()) write_curves_csv(rep, csv);
    return 0;
}

// ---- pipeline ----

struct PipelineArgs {
    std::string config, data, seeds, label, proxies, out_dir;
};

int cmd_pipeline(const PipelineArgs& a, const Global& g) {
    PipelineConfig cfg;
    if (!a.config.empty()) cfg = pipeline_config_from_json(read_json_file(a.config));
    if (!a.data.empty()) cfg.dataset = a.data;
    if (!a.seeds.empty()) cfg.seeds = a.seeds;
    if (!a.label.empty()) cfg.label = a.label;
    if (!a.proxies.empty()) cfg.proxies = split_list(a.proxies);
    if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
    if (g.seed_set) cfg.seed = g.seed;
    if (cfg.dataset.empty() || cfg.seeds.empty() || cfg.label.empty())
        throw InputError("pipeline needs a dataset, a seeds file and a label (flags or --config)");
    if (cfg.out_dir.empty()) throw InputError("pipeline needs an output directory");
    const auto r = run_pipeline(cfg);
    emit({{"labels", to_json(r.labels)},
          {"features", r.features},
          {"test", to_json(r.test_metrics)},
          {"notes", r.notes}},
         "");
    return 0;
}

int fail(int code, const std::string& kind, const std::string& message, const std::string& stage = "") {
    std::cerr << error_envelope(code, kind, message, stage).dump() << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"per_cis: proxy bootstrapping, causal information splitting and robustness benchmarks"};
    app.require_subcommand(1);
    app.fallthrough();
    Global g;
    app.add_option("--seed", g.seed, "Random seed (default 0)")->each([&](const std::string&) { g.seed_set = true; });
    app.add_option("--threads", g.threads, "Cap on worker threads")->envname("PER_CIS_THREADS");

    std::string model, out;
    auto* validate = app.add_subcommand("validate", "Check a DSD file and print hidden and proxy classifications");
    validate->add_option("model", model, "DSD or SCM JSON file")->required();
    validate->add_option("--out", out, "Write the report here instead of stdout");

    SampleArgs sa;
    auto* samp = app.add_subcommand("sample", "Draw rows from an SCM file or the synthetic benchmark model");
    samp->add_option("--scm", sa.scm, "SCM JSON file");
    samp->add_option("--synthetic", sa.synthetic, "Synthetic config JSON (sigma_mg and sigma_mb set the environment)");
    samp->add_option("-n,--rows", sa.rows, "Number of rows")->required();
    samp->add_option("--out", sa.out, "Output CSV")->required();
    samp->add_flag("--hidden", sa.hidden, "Include hidden and mechanism columns");

    std::string scm_path, data_path, queries;
    auto* info = app.add_subcommand("info", "Evaluate information quantities on an SCM or dataset");
    info->add_option("--scm", scm_path, "SCM JSON file");
    info->add_option("--data", data_path, "CSV file for estimate_mi queries");
    info->add_option("--queries", queries, "JSON array of queries")->required();
    info->add_option("--out", out, "Write the report here instead of stdout");

    int subsets = 4;
    auto* bounds = app.add_subcommand("bounds", "Check the information bounds on an SCM");
    bounds->add_option("--scm", scm_path, "SCM JSON file")->required();
    bounds->add_option("--subsets", subsets, "Random (X, M') draws per hidden vertex");
    bounds->add_option("--out", out, "Write the report here instead of stdout");

    BootstrapArgs ba;
    auto* boot = app.add_subcommand("bootstrap", "Label proxies from seeds via the dependence graph");
    boot->add_option("--scm", ba.scm, "DSD/SCM JSON file (oracle mode)");
    boot->add_option("--data", ba.data, "CSV dataset (statistical mode)");
    boot->add_option("--seeds", ba.seeds, "Seeds JSON {proxy: good|bad|ambiguous}")->required();
    boot->add_option("--label", ba.label, "Label column (statistical mode)");
    boot->add_option("--proxies", ba.proxies, "Comma-separated proxy columns (default: all but the label)");
    boot->add_option("--ci", ba.ci, "CI test options JSON");
    boot->add_option("--out", ba.out, "Write the report here instead of stdout");

    std::string spec, out_dir;
    auto* cis = app.add_subcommand("cis", "Train isolation features and check the improvement condition");
    cis->add_option("--data", data_path, "CSV dataset")->required();
    cis->add_option("--spec", spec, "Column spec JSON")->required();
    cis->add_option("--out-dir", out_dir, "Directory for augmented.csv, improvement.json, cis_model.json")->required();

    std::string bench_kind, config, csv;
    bool timing = false;
    auto* bench = app.add_subcommand("bench", "Run the synthetic sweep or the tabular benchmark");
    bench->add_option("kind", bench_kind, "synthetic or tabular")->required()->check(CLI::IsMember({"synthetic", "tabular"}));
    bench->add_option("--config", config, "Config JSON");
    bench->add_option("--out", out, "Report JSON (default stdout)");
    bench->add_option("--csv", csv, "Also write plot-ready per-method curves");
    bench->add_flag("--timing", timing, "Include runtime_seconds in the report");

    PipelineArgs pa;
    auto* pipe = app.add_subcommand("pipeline", "Dependence graph, bootstrapping, CIS and final model in one run");
    pipe->add_option("--config", pa.config, "Pipeline config JSON");
    pipe->add_option("--data", pa.data, "CSV dataset");
    pipe->add_option("--seeds", pa.seeds, "Seeds JSON");
    pipe->add_option("--label", pa.label, "Binary label column");
    pipe->add_option("--proxies", pa.proxies, "Comma-separated proxy columns (default: all but the label)");
    pipe->add_option("--out-dir", pa.out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return fail(2, "usage", e.what());
    }

    try {
        if (g.threads < 0) throw InputError("--threads must be >= 0");
        if (g.threads > 0) set_thread_cap(g.threads);
        if (*validate) return cmd_validate(model, out);
        if (*samp) return cmd_sample(sa, g);
        if (*info) return cmd_info(scm_path, data_path, queries, out);
        if (*bounds) return cmd_bounds(scm_path, subsets, g, out);
        if (*boot) return cmd_bootstrap(ba);
        if (*cis) return cmd_cis(data_path, spec, out_dir, g);
        if (*bench) return cmd_bench(bench_kind, config, out, csv, timing, g);
        if (*pipe) return cmd_pipeline(pa, g);
    } catch (const StageError& e) {
        return fail(e.input_error ? 2 : 1, e.input_error ? "input" : "internal", e.what(), e.stage);
    } catch (const InputError& e) {
        return fail(2, "input", e.what());
    } catch (const fs::filesystem_error& e) {
        return fail(2, "input", e.what());
    } catch (const std::exception& e) {
        return fail(1, "internal", e.what());
    }
    return 1;
}
