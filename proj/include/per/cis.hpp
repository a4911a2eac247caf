#pragma once

#include "per/dataset.hpp"
#include "per/learn.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace per {

struct LearnerSpec {
    enum class Kind { Auto, Linear, Logistic };
    Kind kind = Kind::Auto;  // Auto: Logistic for a 0/1 target, otherwise Linear
    double lambda = 1e-3;    // ridge strength (Linear) or L1 strength (Logistic)
    std::size_t min_rows = 50;
};

std::string_view to_string(LearnerSpec::Kind k);
LearnerSpec::Kind parse_learner_kind(std::string_view text); // throws InputError

// Predictor of the target from the source columns, fitted on one label
// stratum. Linear models predict the mean; Logistic models the probability.
struct StratumModel {
    double y_value = 0;
    std::size_t rows = 0;
    bool degenerate = false; // constant target in the stratum
    double constant_value = 0;
    LinearModel model;       // standardised weights; unused when degenerate
};

struct IsolationFeatureSet {
    std::string target;
    std::vector<std::string> source;
    std::string y;
    LearnerSpec::Kind kind = LearnerSpec::Kind::Linear; // resolved, never Auto
    double lambda = 0;
    std::vector<StratumModel> models; // ascending y value
    std::vector<std::string> columns; // emitted names, one per model
};

// One model per observed label value, fitted only on that stratum's rows.
// Throws InputError on a stratum with fewer than spec.min_rows rows, a
// non-discrete label, or missing columns.
IsolationFeatureSet train_isolation(const Dataset& ds, const std::string& target,
                                    const std::vector<std::string>& source, const std::string& y,
                                    const LearnerSpec& spec = {});

// Predictions of one stratum model on every row of `ds`.
std::vector<double> predict(const IsolationFeatureSet& fs, const StratumModel& m, const Dataset& ds);

// Appends one column per stratum model holding its prediction on every row.
Dataset emit_features(const IsolationFeatureSet& fs, const Dataset& ds);

struct ImprovementOptions {
    int folds = 5;
    std::uint64_t seed = 0;
    double margin = 0; // condition requires pooled > stratified + margin
};

struct ImprovementReport {
    double pooled_error = 0;
    double stratified_error = 0;         // Pr(y)-weighted per-stratum CV errors
    std::vector<double> stratum_errors;  // ascending y value
    std::vector<double> stratum_weights;
    std::string loss;                    // "squared" or "log"
    int folds = 0;
    double margin = 0;
    bool condition_met = false;
};

// Cross-validated error of one pooled model against per-stratum models.
// Throws InputError with a single stratum or too few rows for the folds.
ImprovementReport check_improvement(const Dataset& ds, const std::string& target,
                                    const std::vector<std::string>& source, const std::string& y,
                                    const LearnerSpec& spec = {}, const ImprovementOptions& opts = {});

// Recovers components from linearly mixed columns: source = mixing *
// components. Appends one column per component name. Throws InputError if
// the mixing matrix is not square of the source size or not invertible.
Dataset oracle_isolation_linear(const Dataset& ds, const std::vector<std::string>& source,
                                const std::vector<std::vector<double>>& mixing,
                                const std::vector<std::string>& component_names);

} // namespace per
