#include "per/pipeline.hpp"

#include "per/dataset.hpp"
#include "per/error.hpp"
#include "per/parallel.hpp"

#include <algorithm>
#include <filesystem>
#include <tuple>

namespace per {

namespace {

template <class F>
auto stage(const std::string& name, F f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const InputError& e) {
        throw StageError(name, true, e.what());
    } catch (const std::exception& e) {
        throw StageError(name, false, e.what());
    }
}

Json pipeline_labels_json(const PipelineResult& r) {
    return {{"labels", to_json(r.labels)},
            {"partition", {{"good", r.good}, {"bad", r.bad}, {"ambiguous", r.ambiguous}, {"unlabeled", r.unlabeled}}},
            {"graph", to_json(r.graph)}};
}

void write_artifacts(const PipelineConfig& cfg, const PipelineResult& r, const Dataset& engineered) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.out_dir);
    write_json_file((dir / "labels.json").string(), pipeline_labels_json(r));
    write_csv(engineered, (dir / "engineered.csv").string());
    write_json_file((dir / "model.json").string(),
                    {{"features", r.features},
                     {"model", to_json(r.model)},
                     {"cis", r.cis ? to_json(*r.cis) : Json(nullptr)}});
    write_json_file((dir / "metrics.json").string(), {{"train", to_json(r.train_metrics)},
                                                      {"test", to_json(r.test_metrics)},
                                                      {"train_rows", r.train_rows},
                                                      {"test_rows", r.test_rows},
                                                      {"notes", r.notes}});
}

PipelineResult run_stages(const PipelineConfig& cfg) {
    PipelineResult r;
    const auto [data, seeds, proxies] = stage("load", [&] {
        if (cfg.train_fraction <= 0 || cfg.train_fraction >= 1) throw InputError("train_fraction must be in (0, 1)");
        if (cfg.label.empty()) throw InputError("a label column is required");
        auto seeds = seeds_from_json(read_json_file(cfg.seeds));
        auto data = read_csv(cfg.dataset);
        if (data.info(cfg.label).kind != ColumnKind::Discrete)
            throw InputError("label column '" + cfg.label + "' must be discrete");
        auto proxies = cfg.proxies;
        if (proxies.empty())
            for (const auto& n : data.names())
                if (n != cfg.label) proxies.push_back(n);
        for (const auto& p : proxies) {
            if (p == cfg.label) throw InputError("the label cannot be a proxy");
            data.index(p);
        }
        for (const auto& [name, cls] : seeds)
            if (std::find(proxies.begin(), proxies.end(), name) == proxies.end())
                throw InputError("seed '" + name + "' is not a proxy column");
        return std::tuple{std::move(data), std::move(seeds), std::move(proxies)};
    });
    auto [train, test] = data.split(cfg.train_fraction, derive_seed(cfg.seed, 0));
    r.train_rows = train.rows();
    r.test_rows = test.rows();

    r.graph = stage("dependence_graph", [&] { return dependence_graph_statistical(train, cfg.label, proxies, cfg.ci); });
    if (!r.graph.undetermined.empty())
        r.notes.push_back(std::to_string(r.graph.undetermined.size()) + " proxy pairs undetermined; excluded from propagation");

    r.labels = stage("bootstrap", [&] { return bootstrap_labels(r.graph, seeds); });
    for (const auto& p : proxies) {
        switch (r.labels.at(p).cls) {
        case LabelClass::Good: r.good.push_back(p); break;
        case LabelClass::Bad: r.bad.push_back(p); break;
        case LabelClass::Ambiguous: r.ambiguous.push_back(p); break;
        case LabelClass::Unlabeled: r.unlabeled.push_back(p); break;
        }
    }
    if (!r.unlabeled.empty()) r.notes.push_back("unlabeled proxies are not used as features");

    Dataset train_e = train, test_e = test, full_e = data;
    stage("cis", [&] {
        if (r.ambiguous.empty()) {
            r.notes.push_back("no ambiguous proxies; CIS skipped");
            return 0;
        }
        std::string target = cfg.cis_target;
        if (target.empty()) {
            if (r.good.empty()) {
                r.notes.push_back("no good proxy to use as CIS target; CIS skipped");
                return 0;
            }
            target = r.good.front();
        } else if (std::find(r.good.begin(), r.good.end(), target) == r.good.end()) {
            throw InputError("cis_target '" + target + "' is not labeled good");
        }
        r.cis = train_isolation(train, target, r.ambiguous, cfg.label, cfg.learner);
        train_e = emit_features(*r.cis, train);
        test_e = emit_features(*r.cis, test);
        full_e = emit_features(*r.cis, data);
        return 0;
    });

    stage("fit", [&] {
        r.features = r.good;
        if (r.cis) r.features.insert(r.features.end(), r.cis->columns.begin(), r.cis->columns.end());
        if (r.features.empty()) throw InputError("no good proxies or engineered features to fit on");
        LogisticOptions lo;
        lo.lambda = cfg.lambda;
        r.model = fit_logistic_l1(train_e, r.features, cfg.label, lo);
        r.train_metrics = evaluate(r.model, train_e, cfg.label);
        r.test_metrics = evaluate(r.model, test_e, cfg.label);
        return 0;
    });

    if (!cfg.out_dir.empty()) stage("write", [&] {
            write_artifacts(cfg, r, full_e);
            return 0;
        });
    return r;
}

} // namespace

PipelineConfig pipeline_config_from_json(const Json& j) {
    try {
        PipelineConfig c;
        c.dataset = j.at("dataset").get<std::string>();
        c.seeds = j.at("seeds").get<std::string>();
        c.label = j.at("label").get<std::string>();
        c.proxies = j.value("proxies", c.proxies);
        c.cis_target = j.value("cis_target", c.cis_target);
        if (j.contains("learner")) c.learner = learner_from_json(j.at("learner"));
        if (j.contains("ci")) c.ci = ci_options_from_json(j.at("ci"));
        c.lambda = j.value("lambda", c.lambda);
        c.train_fraction = j.value("train_fraction", c.train_fraction);
        c.seed = j.value("seed", c.seed);
        c.out_dir = j.value("out_dir", c.out_dir);
        return c;
    } catch (const Json::exception& e) {
        throw InputError(std::string("malformed pipeline config: ") + e.what());
    }
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    if (!cfg.out_dir.empty()) {
        std::error_code ec;
        fs::create_directories(cfg.out_dir, ec);
        if (ec) throw StageError("config", true, "cannot create output directory '" + cfg.out_dir + "'");
    }
    try {
        return run_stages(cfg);
    } catch (const StageError& e) {
        if (!cfg.out_dir.empty()) {
            try {
                const int code = e.input_error ? 2 : 1;
                write_json_file((fs::path(cfg.out_dir) / "error.json").string(),
                                error_envelope(code, e.input_error ? "input" : "internal", e.what(), e.stage));
            } catch (const std::exception&) {
            }
        }
        throw;
    }
}

} // namespace per
