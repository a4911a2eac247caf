#pragma once

#include "per/bootstrap.hpp"
#include "per/cis.hpp"
#include "per/io.hpp"
#include "per/learn.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace per {

struct PipelineConfig {
    std::string dataset;             // CSV path
    std::string seeds;               // seeds JSON path
    std::string label;               // binary 0/1 column
    std::vector<std::string> proxies; // empty: every column except the label
    std::string cis_target;          // empty: first Good proxy
    LearnerSpec learner;             // auxiliary learner for CIS
    CiTestOptions ci;
    double lambda = 1e-3;            // final model
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    std::string out_dir;             // empty: no artifacts written
};

// {"dataset", "seeds", "label", "proxies"?, "cis_target"?, "learner"?, "ci"?,
//  "lambda"?, "train_fraction"?, "seed"?, "out_dir"?}
PipelineConfig pipeline_config_from_json(const Json& j);

struct PipelineResult {
    DependenceGraph graph;
    LabelState labels;
    std::vector<std::string> good, bad, ambiguous, unlabeled; // proxy order
    std::optional<IsolationFeatureSet> cis;
    std::vector<std::string> features;
    LinearModel model;
    EvalMetrics train_metrics, test_metrics;
    std::size_t train_rows = 0, test_rows = 0;
    std::vector<std::string> notes;
};

// A failure in one stage; later stages are not run.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, bool input_error, const std::string& message)
        : std::runtime_error(message), stage(std::move(stage)), input_error(input_error) {}
    std::string stage;
    bool input_error;
};

// Dependence graph on the training split, seed propagation, CIS with the
// Ambiguous proxies as source, and an L1 logistic fit on the Good proxies
// plus engineered columns, evaluated on the held-out split. With out_dir set,
// writes labels.json, engineered.csv, model.json and metrics.json there, or
// error.json on failure.
PipelineResult run_pipeline(const PipelineConfig& cfg);

} // namespace per
