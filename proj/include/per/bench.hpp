#pragma once

#include "per/dataset.hpp"

#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace per {

// Gaussian version of the separable example. Y's parent U_G determines the
// label; U_B averages the signed label 2Y-1 and M_B. V_A is the rotation of
// its two components V_A_G and V_A_B.
struct SyntheticConfig {
    double sigma_mg = 1.0; // training environment
    double sigma_mb = 1.0;
    double noise_sd = 0.2;
    double rotation_deg = 45.0;
    double flip_prob = 0.05;
    std::size_t n_train = 20000;
    std::size_t n_test = 20000;
    int repetitions = 20;
    std::uint64_t seed = 0;
    double lambda = 1e-3;
};

struct Environment {
    double sigma_mg = 1.0;
    double sigma_mb = 1.0;
};

// Throws InputError on non-positive sds or flip_prob outside [0, 0.5).
void validate(const SyntheticConfig& cfg);

// Columns M_G, M_B, U_G, U_B, V_A_G, V_A_B (hidden) and Y, V_G, V_B, V_A1,
// V_A2 (observed).
Dataset generate_synthetic(const SyntheticConfig& cfg, const Environment& env, std::size_t n, std::uint64_t seed);

// sigma_mg (or sigma_mb) over {1, 2, 4, 8} with the other held at 1.
std::vector<Environment> default_sweep(bool shift_good);

struct MethodStats {
    std::string method;
    std::vector<double> accuracy; // one per repetition
    std::vector<double> f1;
    double accuracy_mean = 0, accuracy_sd = 0;
    double f1_mean = 0, f1_sd = 0;
};

struct ConditionResult {
    std::string name;
    double sigma_mg = 0, sigma_mb = 0; // synthetic only
    std::vector<MethodStats> methods;
    const MethodStats& method(const std::string& name) const; // throws InputError
};

struct BenchReport {
    std::string kind; // "synthetic" or "tabular"
    int repetitions = 0;
    std::uint64_t seed = 0;
    std::vector<ConditionResult> conditions;
    std::vector<std::string> notes;
    double runtime_seconds = -1; // negative when not measured
};

// Method names shared by both experiments.
inline constexpr const char* kAllFeatures = "all_features";
inline constexpr const char* kLimitedFeatures = "limited_features";
inline constexpr const char* kEngineeredFeatures = "engineered_features";
inline constexpr const char* kOracleComponent = "oracle_component";

// Fits the four synthetic methods on the training environment and evaluates
// each on every sweep point. Repetitions run in parallel with seeds derived
// from (cfg.seed, repetition).
BenchReport run_synthetic_sweep(const SyntheticConfig& cfg, const std::vector<Environment>& sweep);

struct RowFilter {
    std::string column;
    enum class Op { Greater, GreaterEqual } op = Op::Greater;
    double value = 0;
};

struct TabularConfig {
    std::string train_csv; // earlier era
    std::string test_csv;  // later era
    std::string state;
    std::string education = "SCHL";
    std::string insurance = "HINS4";
    std::string commute = "JWMNP";
    std::string income = "PINCP";
    double threshold = 50000; // label = income > threshold
    std::vector<RowFilter> filters = {{"AGEP", RowFilter::Op::Greater, 16},
                                      {"PINCP", RowFilter::Op::Greater, 100},
                                      {"WKHP", RowFilter::Op::Greater, 0},
                                      {"PWGTP", RowFilter::Op::GreaterEqual, 1}};
    int repetitions = 10;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    double lambda = 1e-3;
};

struct Ingested {
    Dataset data;          // education, insurance (0/1), commute, label "y"
    std::size_t rows_read = 0;
    std::size_t filtered = 0;
    std::size_t dropped_missing = 0;
    std::vector<std::string> notes;
};

// Applies the row filters (a filter on an absent column is skipped and
// noted), drops rows missing a required value, maps insurance 1 -> 1 and
// 2 -> 0, and labels income > threshold. Throws InputError on a missing file,
// a missing required column, or an unexpected insurance code.
Ingested ingest_tabular(const std::string& path, const TabularConfig& cfg);

// all_features, limited_features and engineered_features fitted on splits of
// the earlier era and evaluated in-domain (held-out split) and out-of-domain
// (the later era).
BenchReport run_tabular(const TabularConfig& cfg);

// run_tabular for every state found by discover_states(dir), with `base`
// supplying everything except the file paths and state. Condition names are
// prefixed "<STATE>:". Throws InputError when no state pair is found.
BenchReport run_tabular_states(const std::string& dir, const TabularConfig& base);

// Writes a PUMS-like CSV with the columns the tabular pipeline reads.
void write_tabular_fixture(const std::string& path, std::size_t rows, std::uint64_t seed);

// (state, earlier csv, later csv) for every "<STATE>_2019.csv" with a matching
// "<STATE>_2021.csv" in `dir`.
std::vector<std::tuple<std::string, std::string, std::string>> discover_states(const std::string& dir);

} // namespace per
