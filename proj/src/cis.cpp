#include "per/cis.hpp"

#include "per/error.hpp"
#include "per/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

namespace per {

std::string_view to_string(LearnerSpec::Kind k) {
    switch (k) {
    case LearnerSpec::Kind::Auto: return "auto";
    case LearnerSpec::Kind::Linear: return "linear";
    case LearnerSpec::Kind::Logistic: return "logistic";
    }
    return "?";
}

LearnerSpec::Kind parse_learner_kind(std::string_view text) {
    if (text == "auto") return LearnerSpec::Kind::Auto;
    if (text == "linear") return LearnerSpec::Kind::Linear;
    if (text == "logistic") return LearnerSpec::Kind::Logistic;
    throw InputError("unknown learner '" + std::string(text) + "'");
}

namespace {

bool is_binary(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0 || x == 1.0; });
}

void check_columns(const Dataset& ds, const std::string& target, const std::vector<std::string>& source,
                   const std::string& y) {
    if (source.empty()) throw InputError("at least one source column is required");
    for (const auto& s : source) {
        if (s == target || s == y) throw InputError("source column '" + s + "' is also the target or label");
        for (double v : ds.column(s))
            if (std::isnan(v)) throw InputError("source column '" + s + "' has missing values");
    }
    if (target == y) throw InputError("target and label must differ");
    for (double v : ds.column(target))
        if (std::isnan(v)) throw InputError("target column '" + target + "' has missing values");
    if (ds.info(y).kind != ColumnKind::Discrete) throw InputError("label column '" + y + "' must be discrete");
}

LearnerSpec::Kind resolve(const Dataset& ds, const std::string& target, LearnerSpec::Kind k) {
    if (k == LearnerSpec::Kind::Auto)
        return is_binary(ds.column(target)) ? LearnerSpec::Kind::Logistic : LearnerSpec::Kind::Linear;
    if (k == LearnerSpec::Kind::Logistic && !is_binary(ds.column(target)))
        throw InputError("logistic learner needs a 0/1 target");
    return k;
}

// Ridge regression on standardised inputs; the intercept is the target mean.
LinearModel fit_linear(const Dataset& ds, std::span<const std::size_t> rows, const std::string& target,
                       const std::vector<std::string>& source, double lambda) {
    const std::size_t n = rows.size(), p = source.size();
    LinearModel m;
    m.features = source;
    m.lambda = lambda;
    m.weights.assign(p, 0.0);
    m.mean.assign(p, 0.0);
    m.scale.assign(p, 1.0);
    m.constant.assign(p, false);
    const auto t = ds.column(target);
    double tbar = 0;
    for (std::size_t r : rows) tbar += t[r];
    tbar /= static_cast<double>(n);
    Eigen::MatrixXd x(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto col = ds.column(source[j]);
        double mu = 0;
        for (std::size_t r : rows) mu += col[r];
        mu /= static_cast<double>(n);
        double var = 0;
        for (std::size_t r : rows) var += (col[r] - mu) * (col[r] - mu);
        const double sd = std::sqrt(var / static_cast<double>(n));
        m.mean[j] = mu;
        m.constant[j] = sd <= 1e-12 * std::max(1.0, std::abs(mu));
        if (!m.constant[j]) m.scale[j] = sd;
        for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            m.constant[j] ? 0.0 : (col[rows[i]] - mu) / m.scale[j];
    }
    Eigen::VectorXd yc(n);
    for (std::size_t i = 0; i < n; ++i) yc(static_cast<Eigen::Index>(i)) = t[rows[i]] - tbar;
    const double inv_n = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd a = x.transpose() * x * inv_n;
    a.diagonal().array() += std::max(lambda, 1e-12);
    const Eigen::VectorXd w = a.ldlt().solve(x.transpose() * yc * inv_n);
    for (std::size_t j = 0; j < p; ++j) m.weights[j] = m.constant[j] ? 0.0 : w(static_cast<Eigen::Index>(j));
    m.intercept = tbar;
    m.intercept_only = std::all_of(m.constant.begin(), m.constant.end(), [](bool c) { return c; });
    m.converged = true;
    double sse = 0;
    const Eigen::VectorXd resid = yc - x * w;
    sse = resid.squaredNorm();
    m.objective = sse * inv_n + lambda * w.squaredNorm();
    return m;
}

StratumModel fit_stratum(const Dataset& ds, std::span<const std::size_t> rows, const std::string& target,
                         const std::vector<std::string>& source, LearnerSpec::Kind kind, double lambda) {
    StratumModel sm;
    sm.rows = rows.size();
    const auto t = ds.column(target);
    const double first = t[rows[0]];
    sm.degenerate = std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return t[r] == first; });
    if (sm.degenerate) {
        sm.constant_value = first;
        sm.model.features = source;
        sm.model.weights.assign(source.size(), 0.0);
        sm.model.mean.assign(source.size(), 0.0);
        sm.model.scale.assign(source.size(), 1.0);
        sm.model.constant.assign(source.size(), true);
        sm.model.intercept_only = true;
        sm.model.lambda = lambda;
        return sm;
    }
    if (kind == LearnerSpec::Kind::Linear) {
        sm.model = fit_linear(ds, rows, target, source, lambda);
    } else {
        LogisticOptions o;
        o.lambda = lambda;
        sm.model = fit_logistic_l1(ds.select_rows(rows), source, target, o);
    }
    return sm;
}

double predict_row_linear(const LinearModel& m, const std::vector<std::span<const double>>& cols, std::size_t r) {
    double v = m.intercept;
    for (std::size_t j = 0; j < cols.size(); ++j)
        if (m.weights[j] != 0.0) v += m.weights[j] * (cols[j][r] - m.mean[j]) / m.scale[j];
    return v;
}

std::vector<double> predict_model(const StratumModel& sm, LearnerSpec::Kind kind, const Dataset& ds) {
    std::vector<std::span<const double>> cols;
    for (const auto& s : sm.model.features) cols.push_back(ds.column(s));
    std::vector<double> out(ds.rows());
    for (std::size_t r = 0; r < out.size(); ++r) {
        if (sm.degenerate) {
            out[r] = sm.constant_value;
            continue;
        }
        const double v = predict_row_linear(sm.model, cols, r);
        out[r] = kind == LearnerSpec::Kind::Linear ? v
                 : v >= 0                          ? 1.0 / (1.0 + std::exp(-v))
                                                   : std::exp(v) / (1.0 + std::exp(v));
    }
    return out;
}

std::string value_label(double v) {
    char buf[64];
    if (v == std::round(v) && std::abs(v) < 1e15)
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
    else
        std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double row_error(LearnerSpec::Kind kind, double pred, double actual) {
    if (kind == LearnerSpec::Kind::Linear) return (pred - actual) * (pred - actual);
    const double p = std::clamp(pred, 1e-12, 1 - 1e-12);
    return -(actual * std::log(p) + (1 - actual) * std::log(1 - p));
}

} // namespace

IsolationFeatureSet train_isolation(const Dataset& ds, const std::string& target,
                                    const std::vector<std::string>& source, const std::string& y,
                                    const LearnerSpec& spec) {
    check_columns(ds, target, source, y);
    IsolationFeatureSet fs;
    fs.target = target;
    fs.source = source;
    fs.y = y;
    fs.kind = resolve(ds, target, spec.kind);
    fs.lambda = spec.lambda;
    for (const auto& [value, rows] : ds.strata(y)) {
        if (rows.size() < std::max<std::size_t>(spec.min_rows, 2))
            throw InputError("stratum " + y + "=" + value_label(value) + " has " + std::to_string(rows.size()) +
                             " rows, fewer than " + std::to_string(spec.min_rows));
        auto sm = fit_stratum(ds, rows, target, source, fs.kind, spec.lambda);
        sm.y_value = value;
        fs.models.push_back(std::move(sm));
        fs.columns.push_back("cis_" + target + "_y" + value_label(value));
    }
    return fs;
}

std::vector<double> predict(const IsolationFeatureSet& fs, const StratumModel& m, const Dataset& ds) {
    return predict_model(m, fs.kind, ds);
}

Dataset emit_features(const IsolationFeatureSet& fs, const Dataset& ds) {
    for (const auto& s : fs.source) (void)ds.index(s);
    Dataset out = ds;
    for (std::size_t k = 0; k < fs.models.size(); ++k)
        out.add_column({fs.columns[k], ColumnKind::Real, 0, false}, predict_model(fs.models[k], fs.kind, ds));
    return out;
}

ImprovementReport check_improvement(const Dataset& ds, const std::string& target,
                                    const std::vector<std::string>& source, const std::string& y,
                                    const LearnerSpec& spec, const ImprovementOptions& opts) {
    check_columns(ds, target, source, y);
    if (opts.folds < 2) throw InputError("cross-validation needs at least 2 folds");
    const auto kind = resolve(ds, target, spec.kind);
    const auto strata = ds.strata(y);
    if (strata.size() < 2) throw InputError("label column '" + y + "' has a single stratum");
    const auto k = static_cast<std::size_t>(opts.folds);
    for (const auto& [value, rows] : strata)
        if (rows.size() < std::max(spec.min_rows, 2 * k))
            throw InputError("stratum " + y + "=" + value_label(value) + " has too few rows for " +
                             std::to_string(k) + "-fold cross-validation");

    // Seeded Fisher-Yates permutation; fold = position mod k.
    const std::size_t n = ds.rows();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 rng(derive_seed(opts.seed, 0));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
    std::vector<std::size_t> fold(n);
    for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = i % k;

    const auto t = ds.column(target);
    // Held-out error summed over `rows` for models fitted on the other folds.
    auto cv_error = [&](const std::vector<std::size_t>& rows) {
        double total = 0;
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<std::size_t> train, test;
            for (std::size_t r : rows) (fold[r] == f ? test : train).push_back(r);
            if (test.empty()) continue;
            const auto sm = fit_stratum(ds, train, target, source, kind, spec.lambda);
            const auto part = ds.select_rows(test);
            const auto pred = predict_model(sm, kind, part);
            for (std::size_t i = 0; i < test.size(); ++i) total += row_error(kind, pred[i], t[test[i]]);
        }
        return total;
    };

    ImprovementReport rep;
    rep.loss = kind == LearnerSpec::Kind::Linear ? "squared" : "log";
    rep.folds = opts.folds;
    rep.margin = opts.margin;
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    rep.pooled_error = cv_error(all) / static_cast<double>(n);
    for (const auto& [_, rows] : strata) {
        const double w = static_cast<double>(rows.size()) / static_cast<double>(n);
        const double e = cv_error(rows) / static_cast<double>(rows.size());
        rep.stratum_errors.push_back(e);
        rep.stratum_weights.push_back(w);
        rep.stratified_error += w * e;
    }
    rep.condition_met = rep.pooled_error > rep.stratified_error + opts.margin;
    return rep;
}

Dataset oracle_isolation_linear(const Dataset& ds, const std::vector<std::string>& source,
                                const std::vector<std::vector<double>>& mixing,
                                const std::vector<std::string>& component_names) {
    const std::size_t k = source.size();
    if (k == 0) throw InputError("no source columns");
    if (mixing.size() != k || component_names.size() != k)
        throw InputError("mixing matrix and component names must match the source size");
    Eigen::MatrixXd a(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        if (mixing[i].size() != k) throw InputError("mixing matrix must be square");
        for (std::size_t j = 0; j < k; ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = mixing[i][j];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw InputError("mixing matrix is not invertible");
    const Eigen::MatrixXd inv = lu.inverse();
    std::vector<std::span<const double>> cols;
    for (const auto& s : source) cols.push_back(ds.column(s));
    std::vector<std::vector<double>> comp(k, std::vector<double>(ds.rows()));
    Eigen::VectorXd v(k);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        for (std::size_t j = 0; j < k; ++j) v(static_cast<Eigen::Index>(j)) = cols[j][r];
        const Eigen::VectorXd c = inv * v;
        for (std::size_t j = 0; j < k; ++j) comp[j][r] = c(static_cast<Eigen::Index>(j));
    }
    Dataset out = ds;
    for (std::size_t j = 0; j < k; ++j) out.add_column({component_names[j], ColumnKind::Real, 0, true}, comp[j]);
    return out;
}

} // namespace per
