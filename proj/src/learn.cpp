#include "per/learn.hpp"

#include "per/error.hpp"

#include <algorithm>
#include <cmath>

namespace per {

namespace {

// log(1 + exp(-m)) without overflow.
double log_loss(double margin) {
    return margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
}

double sigmoid(double t) {
    return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

double soft_threshold(double v, double t) {
    return v > t ? v - t : v < -t ? v + t : 0.0;
}

std::vector<double> labels_of(const Dataset& ds, const std::string& label) {
    const auto col = ds.column(label);
    std::vector<double> y(col.begin(), col.end());
    for (double v : y)
        if (v != 0.0 && v != 1.0) throw InputError("label column '" + label + "' must be binary 0/1");
    return y;
}

} // namespace

double logistic_objective(const std::vector<std::vector<double>>& x, std::span<const double> y,
                          std::span<const double> w, double b, double lambda) {
    const std::size_t n = y.size();
    double loss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double t = b;
        for (std::size_t j = 0; j < w.size(); ++j) t += w[j] * x[j][i];
        loss += log_loss((2 * y[i] - 1) * t);
    }
    double pen = 0;
    for (double v : w) pen += std::abs(v);
    return loss / static_cast<double>(n) + lambda * pen;
}

LinearModel fit_logistic_l1(const Dataset& ds, std::span<const std::string> features, const std::string& label,
                            const LogisticOptions& opts) {
    if (features.empty()) throw InputError("at least one feature is required");
    if (opts.lambda < 0) throw InputError("lambda must be non-negative");
    const std::size_t n = ds.rows();
    if (n < 10) throw InputError("at least 10 rows are required to fit");
    const auto y = labels_of(ds, label);
    const std::size_t p = features.size();

    LinearModel m;
    m.features.assign(features.begin(), features.end());
    m.lambda = opts.lambda;
    m.weights.assign(p, 0.0);
    m.mean.assign(p, 0.0);
    m.scale.assign(p, 1.0);
    m.constant.assign(p, false);
    std::vector<std::vector<double>> x(p, std::vector<double>(n));
    for (std::size_t j = 0; j < p; ++j) {
        const auto col = ds.column(features[j]);
        double mu = 0;
        for (double v : col) {
            if (std::isnan(v)) throw InputError("feature '" + features[j] + "' has missing values");
            mu += v;
        }
        mu /= static_cast<double>(n);
        double var = 0;
        for (double v : col) var += (v - mu) * (v - mu);
        const double sd = std::sqrt(var / static_cast<double>(n));
        m.mean[j] = mu;
        if (sd <= 1e-12 * std::max(1.0, std::abs(mu))) {
            m.constant[j] = true;
        } else {
            m.scale[j] = sd;
        }
        for (std::size_t i = 0; i < n; ++i) x[j][i] = m.constant[j] ? 0.0 : (col[i] - mu) / m.scale[j];
    }
    m.intercept_only = std::all_of(m.constant.begin(), m.constant.end(), [](bool c) { return c; });

    // Margins t_i = b + w.x_i; objective tracked incrementally.
    std::vector<double> t(n, 0.0), s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = 2 * y[i] - 1;
    const double inv_n = 1.0 / static_cast<double>(n);
    auto loss_at = [&](const std::vector<double>* col, double step) {
        double l = 0;
        for (std::size_t i = 0; i < n; ++i) l += log_loss(s[i] * (t[i] + step * (col ? (*col)[i] : 1.0)));
        return l * inv_n;
    };
    double loss = loss_at(nullptr, 0.0);
    double l1 = 0;

    // One coordinate: Newton proposal, soft-threshold, Armijo backtracking.
    // Returns the applied change.
    auto update = [&](const std::vector<double>* col, double& coef, double penalty) {
        double g = 0, h = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = col ? (*col)[i] : 1.0;
            const double pr = sigmoid(t[i]);
            g += (pr - y[i]) * xi;
            h += pr * (1 - pr) * xi * xi;
        }
        g *= inv_n;
        h = std::max(h * inv_n, 1e-10);
        const double target = soft_threshold(coef - g / h, penalty / h);
        const double d = target - coef;
        if (d == 0.0) return 0.0;
        const double delta = g * d + penalty * (std::abs(coef + d) - std::abs(coef));
        double step = 1.0;
        for (int k = 0; k < 60; ++k, step *= 0.5) {
            const double nl = loss_at(col, step * d);
            const double npen = penalty * (std::abs(coef + step * d) - std::abs(coef));
            if (nl + npen <= loss + 0.01 * step * delta || k == 59) {
                if (nl + npen > loss) return 0.0; // no descent available at machine precision
                for (std::size_t i = 0; i < n; ++i) t[i] += step * d * (col ? (*col)[i] : 1.0);
                loss = nl;
                if (col) l1 += std::abs(coef + step * d) - std::abs(coef);
                coef += step * d;
                return step * d;
            }
        }
        return 0.0;
    };

    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        double biggest = std::abs(update(nullptr, m.intercept, 0.0));
        for (std::size_t j = 0; j < p; ++j)
            if (!m.constant[j]) biggest = std::max(biggest, std::abs(update(&x[j], m.weights[j], opts.lambda)));
        m.sweeps = sweep + 1;
        m.trace.push_back(loss + opts.lambda * l1);
        if (biggest < opts.tolerance) {
            m.converged = true;
            break;
        }
    }
    m.objective = m.trace.empty() ? loss : m.trace.back();
    return m;
}

std::vector<double> predict_proba(const LinearModel& m, const Dataset& ds) {
    std::vector<double> out(ds.rows(), m.intercept);
    for (std::size_t j = 0; j < m.features.size(); ++j) {
        if (m.weights[j] == 0.0) {
            (void)ds.index(m.features[j]);
            continue;
        }
        const auto col = ds.column(m.features[j]);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += m.weights[j] * (col[i] - m.mean[j]) / m.scale[j];
    }
    for (auto& v : out) v = sigmoid(v);
    return out;
}

EvalMetrics metrics_from_predictions(std::span<const int> predicted, std::span<const int> actual) {
    if (predicted.size() != actual.size()) throw InputError("prediction and label lengths differ");
    if (predicted.empty()) throw InputError("cannot evaluate on an empty dataset");
    EvalMetrics e;
    e.n = predicted.size();
    for (std::size_t i = 0; i < e.n; ++i) {
        const bool p = predicted[i] != 0, a = actual[i] != 0;
        e.tp += p && a;
        e.fp += p && !a;
        e.tn += !p && !a;
        e.fn += !p && a;
    }
    e.accuracy = static_cast<double>(e.tp + e.tn) / static_cast<double>(e.n);
    const std::size_t denom = 2 * e.tp + e.fp + e.fn;
    e.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(e.tp) / static_cast<double>(denom);
    return e;
}

EvalMetrics evaluate(const LinearModel& m, const Dataset& ds, const std::string& label) {
    if (ds.rows() == 0) throw InputError("cannot evaluate on an empty dataset");
    const auto y = labels_of(ds, label);
    const auto prob = predict_proba(m, ds);
    std::vector<int> pred(prob.size()), act(y.size());
    for (std::size_t i = 0; i < prob.size(); ++i) {
        pred[i] = prob[i] > 0.5 ? 1 : 0;
        act[i] = static_cast<int>(y[i]);
    }
    return metrics_from_predictions(pred, act);
}

} // namespace per
