#pragma once

#include "per/dataset.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace per {

struct LogisticOptions {
    double lambda = 1e-3;
    double tolerance = 1e-7; // stop when the largest parameter change in a sweep is below this
    int max_sweeps = 10000;
};

// L1-regularised logistic regression on standardised features. Weights live
// on the standardised scale; `mean` and `scale` map raw inputs onto it.
struct LinearModel {
    std::vector<std::string> features;
    std::vector<double> weights;
    double intercept = 0;
    std::vector<double> mean;
    std::vector<double> scale;         // population sd; 1 for constant features
    std::vector<bool> constant;        // constant in training data: weight pinned to 0
    bool intercept_only = false;       // every feature was constant
    double lambda = 0;
    int sweeps = 0;
    bool converged = false;
    double objective = 0;              // mean log-loss + lambda * |w|_1
    std::vector<double> trace;         // objective after each sweep
};

// Minimises mean logistic loss + lambda * |w|_1 by cyclic coordinate
// Newton steps with soft-thresholding and backtracking; the intercept is not
// penalised. The label must be 0/1; every column must be complete; n >= 10.
LinearModel fit_logistic_l1(const Dataset& ds, std::span<const std::string> features, const std::string& label,
                            const LogisticOptions& opts = {});

// Objective on standardised design rows, for comparing solvers.
double logistic_objective(const std::vector<std::vector<double>>& x, std::span<const double> y,
                          std::span<const double> w, double b, double lambda);

std::vector<double> predict_proba(const LinearModel& m, const Dataset& ds);

struct EvalMetrics {
    double accuracy = 0;
    double f1 = 0; // 0 when there are no true or predicted positives
    std::size_t n = 0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

EvalMetrics metrics_from_predictions(std::span<const int> predicted, std::span<const int> actual);

// Predicts 1 when the probability exceeds 0.5. Throws InputError on an empty
// dataset or missing columns.
EvalMetrics evaluate(const LinearModel& m, const Dataset& ds, const std::string& label);

} // namespace per
