// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include "closed_form_suite.hpp"
#include "learn_reference.hpp"
#include "per/bench.hpp"
#include "per/bootstrap.hpp"
#include "per/cis.hpp"
#include "per/dropout_scm.hpp"
#include "per/info.hpp"
#include "per/learn.hpp"
#include "per/random_models.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

using namespace per;

namespace {

// Pinned tolerances and budgets.
constexpr double kExactBits = 1e-9;
constexpr double kLossyFaithfulnessBits = 0.05;
constexpr double kClosedFormBudgetSeconds = 120;
constexpr double kSweepBudgetSeconds = 600;
constexpr int kClosedFormModels = 500;
constexpr int kSoundnessModels = 200;
constexpr int kStatisticalRuns = 100;
constexpr int kStatisticalRequired = 95;
constexpr std::size_t kStatisticalRows = 50000;
constexpr double kOracleGap = 0.02;
constexpr double kTabularSlack = 0.01;
constexpr double kSmokeSpread = 0.02;
constexpr double kOptimizerGap = 1e-6;
constexpr int kCalibrationPermutations = 100;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;

void report(int index, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s  %s\n", index, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += pass ? 0 : 1;
}

// Runs one criterion; an exception counts as a failure.
void criterion(int index, const std::function<std::pair<bool, std::string>()>& body) {
    try {
        const auto [pass, detail] = body();
        report(index, pass, detail);
    } catch (const std::exception& e) {
        report(index, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---- 1 ----

std::pair<bool, std::string> closed_forms() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2024);
    closed_form_suite::Counts c;
    for (int m = 0; m < kClosedFormModels; ++m) closed_form_suite::check_model(random_small_scm(rng), rng, c);
    const double t = seconds_since(start);
    std::ostringstream s;
    s << kClosedFormModels << " models; redundancy " << c.redundancy << ", good " << c.good << ", bad " << c.bad
      << " comparisons; failures " << c.failures << "; worst " << c.worst << " bits; " << fmt("%.1f", t) << " s";
    if (!c.messages.empty()) s << "; first: " << c.messages.front();
    const bool pass = c.failures == 0 && c.redundancy > 0 && c.good > 0 && c.bad > 0 && t < kClosedFormBudgetSeconds;
    return {pass, s.str()};
}

// ---- 2 ----

VertexSet draw_subset(const VertexSet& pool, std::mt19937_64& rng, std::vector<bool>& used) {
    VertexSet s;
    for (VertexId v : pool)
        if (!used[static_cast<std::size_t>(v)] && rng() % 3 == 0) {
            s.push_back(v);
            used[static_cast<std::size_t>(v)] = true;
        }
    return s;
}

std::pair<bool, std::string> identity_suite() {
    std::mt19937_64 rng(7);
    std::map<std::string, int> checked, violated;
    double worst = 0;
    for (int m = 0; m < 200; ++m) {
        const auto scm = random_small_scm(rng);
        VertexSet all(scm.size());
        std::iota(all.begin(), all.end(), 0);
        const auto t = enumerate_joint(scm, all);
        for (int k = 0; k < 5; ++k) {
            std::vector<bool> used(all.size(), false);
            auto a = draw_subset(all, rng, used), b1 = draw_subset(all, rng, used), b2 = draw_subset(all, rng, used),
                 c = draw_subset(all, rng, used);
            if (a.empty() || b1.empty()) continue;
            const auto b = make_set(set_union(b1, b2));
            const double chain = mutual_info(t, a, b) - (mutual_info(t, a, b1) + conditional_mi(t, a, b2, b1));
            worst = std::max(worst, std::abs(chain));
            ++checked["chain_rule"];
            violated["chain_rule"] += std::abs(chain) > kExactBits;
            if (c.empty()) continue;
            const double ii = interaction_info(t, a, b1, c);
            const double perms[] = {interaction_info(t, a, c, b1), interaction_info(t, b1, a, c),
                                    interaction_info(t, b1, c, a), interaction_info(t, c, a, b1),
                                    interaction_info(t, c, b1, a)};
            ++checked["ii_symmetry"];
            for (double p : perms) {
                worst = std::max(worst, std::abs(p - ii));
                violated["ii_symmetry"] += std::abs(p - ii) > kExactBits;
            }
        }
        BoundOptions o;
        o.seed = static_cast<std::uint64_t>(m);
        o.tolerance = kExactBits;
        for (const auto& r : check_bounds(scm, o)) {
            if (r.skipped) continue;
            const auto key = r.name.substr(0, r.name.find('('));
            ++checked[key];
            violated[key] += !r.satisfied;
        }
    }
    bool pass = true;
    std::ostringstream s;
    for (const char* k : {"chain_rule", "ii_symmetry", "dpi", "positive_ii", "applied_dpi", "collider_dpi",
                          "common_cause"}) {
        s << k << " " << checked[k] - violated[k] << "/" << checked[k] << "; ";
        pass &= checked[k] > 0 && violated[k] == 0;
    }
    s << "worst identity error " << worst;
    return {pass, s.str()};
}

// ---- 3 ----

std::pair<bool, std::string> faithfulness() {
    const auto plain = [](std::vector<std::string> names, std::vector<Edge> edges) {
        std::vector<VertexRole> roles(names.size(), VertexRole::Proxy);
        return DistributionShiftDiagram(Dag(std::move(names), std::move(edges)), std::move(roles));
    };
    const VertexId all[] = {0, 1, 2}, u1[] = {0}, u2[] = {1}, v[] = {2};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        DropoutScm inv(plain({"U1", "U2", "V"}, {{0, 2}, {1, 2}}), {{u(rng), {}}, {u(rng), {}}},
                       {{0, {0.3, 0.7}}, {1, {0.2, 0.5, 0.3}}});
        worst = std::max(worst, std::abs(conditional_mi(enumerate_joint(inv, all), u1, u2, v)));
    }
    DropoutScm lossy(plain({"U1", "U2", "V"}, {{0, 2}, {1, 2}}), {{0.9, {}}, {0.9, {}}},
                     {{0, {0.5, 0.5}}, {1, {0.5, 0.5}}}, {{2, Combiner::sum_mod(2)}});
    const double lossy_bits = conditional_mi(enumerate_joint(lossy, all), u1, u2, v);
    return {worst <= kExactBits && lossy_bits > kLossyFaithfulnessBits,
            "invertible max I(U1:U2|V) " + fmt("%.3g", worst) + " over 100 models; lossy " + fmt("%.4f", lossy_bits) +
                " bits"};
}

// ---- 4 ----

std::pair<bool, std::string> bootstrapping() {
    std::mt19937_64 rng(99);
    int models = 0, attempts = 0, wrong = 0, labelled = 0;
    while (models < kSoundnessModels && attempts < 100000) {
        ++attempts;
        RandomDsdOptions o;
        o.n_causes = static_cast<int>(rng() % 3);
        o.n_effects = 1 + static_cast<int>(rng() % 3);
        o.n_proxies = 2 + static_cast<int>(rng() % 6);
        o.edge_density = 0.2 + 0.6 * static_cast<double>(rng() % 100) / 100.0;
        o.reversed_mechanism_prob = 0.3;
        const auto dsd = random_dsd(o, rng);
        const auto& dag = dsd.dag();
        const auto truth = classify_proxies(dsd, classify_hidden(dsd));
        SeedSet seeds;
        for (VertexId v : dsd.proxies())
            if (rng() % 3 == 0) seeds[dag.name(v)] = proxy_class(truth, v);
        if (!verify_seed_conditions(dsd, seeds).passed()) continue;
        ++models;
        const auto labels = bootstrap_labels(dependence_graph_oracle(dsd), seeds);
        for (VertexId v : dsd.proxies()) {
            const auto want = proxy_class(truth, v);
            const auto& got = labels.at(dag.name(v));
            const LabelClass expect = want == ProxyClass::Good  ? LabelClass::Good
                                      : want == ProxyClass::Bad ? LabelClass::Bad
                                                                : LabelClass::Ambiguous;
            wrong += got.cls != expect;
            labelled += !got.seed;
        }
    }

    const auto scm = separable_example_scm({}, 2);
    const auto oracle = dependence_graph_oracle(scm.dsd());
    int equal = 0;
    for (int run = 0; run < kStatisticalRuns; ++run) {
        const auto ds = sample(scm, kStatisticalRows, static_cast<std::uint64_t>(run));
        const auto g = dependence_graph_statistical(ds, "Y", oracle.names);
        equal += g.undetermined.empty() && g.edges == oracle.edges;
    }
    std::ostringstream s;
    s << "oracle mode: " << wrong << " misclassified of " << labelled << " propagated labels over " << models
      << " DSDs; statistical mode: " << equal << "/" << kStatisticalRuns << " oracle-equal graphs";
    return {models == kSoundnessModels && wrong == 0 && equal >= kStatisticalRequired, s.str()};
}

// ---- 5 ----

std::pair<bool, std::string> synthetic_experiment() {
    const auto start = Clock::now();
    SyntheticConfig cfg; // n_train = n_test = 20000, 20 repetitions
    const auto good = run_synthetic_sweep(cfg, default_sweep(true));
    const auto bad = run_synthetic_sweep(cfg, default_sweep(false));
    const double t = seconds_since(start);
    auto acc = [](const ConditionResult& c, const char* m) { return c.method(m).accuracy_mean; };
    auto sd = [](const ConditionResult& c, const char* m) { return c.method(m).accuracy_sd; };

    bool a = true;
    for (const auto& c : good.conditions) a &= acc(c, kAllFeatures) >= acc(c, kLimitedFeatures);
    const auto& far = bad.conditions.back();
    const bool b = acc(far, kLimitedFeatures) >= acc(far, kAllFeatures);
    bool c1 = true;
    double gap = 0;
    int points = 0;
    for (const auto* rep : {&good, &bad})
        for (const auto& c : rep->conditions) {
            c1 &= acc(c, kEngineeredFeatures) >= acc(c, kLimitedFeatures) - sd(c, kLimitedFeatures);
            gap += std::abs(acc(c, kEngineeredFeatures) - acc(c, kOracleComponent));
            ++points;
        }
    const auto& home = bad.conditions.front();
    const double drop_eng = acc(home, kEngineeredFeatures) - acc(far, kEngineeredFeatures);
    const double drop_all = acc(home, kAllFeatures) - acc(far, kAllFeatures);
    const bool c2 = drop_eng <= 0.5 * drop_all;
    gap /= points;
    const bool d = gap <= kOracleGap;

    std::ostringstream s;
    s << "(a) " << (a ? "ok" : "no") << " (b) " << (b ? "ok" : "no") << " limited " << fmt("%.3f", acc(far, kLimitedFeatures))
      << " vs all " << fmt("%.3f", acc(far, kAllFeatures)) << " at sigma_mb=8; (c) " << (c1 && c2 ? "ok" : "no")
      << " degradation engineered " << fmt("%.3f", drop_eng) << " vs all " << fmt("%.3f", drop_all) << "; (d) "
      << (d ? "ok" : "no") << " mean |eng - oracle| " << fmt("%.4f", gap) << "; " << fmt("%.1f", t) << " s";
    return {a && b && c1 && c2 && d && t < kSweepBudgetSeconds, s.str()};
}

// ---- 6 ----

// Plug-in I(f : target | Y) and the largest value over within-stratum
// permutations of f, which break any dependence beyond Y.
std::pair<double, double> mi_and_band(const std::vector<double>& f, std::span<const double> target,
                                      std::span<const double> y, std::uint64_t seed) {
    auto mi = [&](const std::vector<double>& col) {
        Dataset d;
        d.add_column({"f", ColumnKind::Real, 0, false}, col);
        d.add_column({"t", ColumnKind::Real, 0, false}, {target.begin(), target.end()});
        d.add_column({"y", ColumnKind::Discrete, 2, false}, {y.begin(), y.end()});
        const std::string a[] = {"f"}, b[] = {"t"}, z[] = {"y"};
        return estimate_mi(d, a, b, z).bits;
    };
    std::map<double, std::vector<std::size_t>> strata;
    for (std::size_t i = 0; i < y.size(); ++i) strata[y[i]].push_back(i);
    std::mt19937_64 rng(seed);
    double upper = 0;
    for (int p = 0; p < kCalibrationPermutations; ++p) {
        auto perm = f;
        for (const auto& [_, rows] : strata) {
            auto shuffled = rows;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            for (std::size_t k = 0; k < rows.size(); ++k) perm[rows[k]] = f[shuffled[k]];
        }
        upper = std::max(upper, mi(perm));
    }
    return {mi(f), upper};
}

std::pair<bool, std::string> isolation_property() {
    SyntheticConfig cfg;
    const auto ds = generate_synthetic(cfg, {1, 1}, 40000, 17);
    auto [train, test] = ds.split(0.5, 1);
    const std::vector<std::string> source{"V_A1", "V_A2"};
    const auto fs = train_isolation(train, "V_G", source, "Y");
    const auto out = emit_features(fs, test);
    bool pass = true;
    std::ostringstream s;
    std::uint64_t seed = 0;
    for (const auto& col : fs.columns) {
        const auto fc = out.column(col);
        const std::vector<double> f(fc.begin(), fc.end());
        const auto [mb, band_b] = mi_and_band(f, test.column("U_B"), test.column("Y"), ++seed);
        const auto [mg, band_g] = mi_and_band(f, test.column("U_G"), test.column("Y"), ++seed);
        pass &= mb <= band_b && mg > band_g;
        s << col << ": I(.;U_B|Y) " << fmt("%.4f", mb) << " band<=" << fmt("%.4f", band_b) << ", I(.;U_G|Y) "
          << fmt("%.4f", mg) << " band<=" << fmt("%.4f", band_g) << "; ";
    }
    return {pass, s.str()};
}

// ---- 7 ----

std::pair<bool, std::string> tabular() {
    const char* dir = std::getenv("PER_CIS_PUMS_DIR");
    if (dir && *dir) {
        const auto rep = run_tabular_states(dir, TabularConfig{});
        std::map<std::string, std::map<std::string, double>> mean;
        std::map<std::string, int> count;
        for (const auto& c : rep.conditions) {
            const auto kind = c.name.substr(c.name.find(':') + 1);
            ++count[kind];
            for (const auto& m : c.methods) mean[kind][m.method] += m.accuracy_mean;
        }
        for (auto& [kind, ms] : mean)
            for (auto& [_, v] : ms) v /= count[kind];
        auto& in = mean["in_domain"];
        auto& out = mean["out_of_domain"];
        const bool ood = out[kEngineeredFeatures] >= out[kAllFeatures] - kTabularSlack;
        const bool ind = in[kAllFeatures] >= in[kEngineeredFeatures] - kTabularSlack &&
                         in[kEngineeredFeatures] >= in[kLimitedFeatures] - kTabularSlack;
        std::ostringstream s;
        s << count["in_domain"] << " states; out-of-domain engineered " << fmt("%.4f", out[kEngineeredFeatures])
          << " all " << fmt("%.4f", out[kAllFeatures]) << "; in-domain all/engineered/limited "
          << fmt("%.4f", in[kAllFeatures]) << "/" << fmt("%.4f", in[kEngineeredFeatures]) << "/"
          << fmt("%.4f", in[kLimitedFeatures]);
        return {ood && ind, s.str()};
    }
    const auto path = (std::filesystem::temp_directory_path() / "per_acceptance_fixture.csv").string();
    write_tabular_fixture(path, 2000, 5);
    TabularConfig cfg;
    cfg.train_csv = path;
    cfg.test_csv = path;
    const auto rep = run_tabular(cfg);
    bool pass = rep.conditions.size() == 2;
    std::ostringstream s;
    s << "PER_CIS_PUMS_DIR unset; smoke fixture: ";
    for (const auto& c : rep.conditions) {
        double lo = 1, hi = 0;
        for (const auto& m : c.methods) {
            lo = std::min(lo, m.accuracy_mean);
            hi = std::max(hi, m.accuracy_mean);
        }
        pass &= c.methods.size() == 3 && hi - lo <= kSmokeSpread && lo > 0.5;
        s << c.name << " accuracy range [" << fmt("%.4f", lo) << ", " << fmt("%.4f", hi) << "]; ";
    }
    return {pass, s.str()};
}

// ---- 8 ----

std::pair<bool, std::string> optimizer() {
    double worst = 0;
    int fits = 0;
    for (const double lambda : {0.0, 1e-3, 0.01, 0.05, 0.1}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const auto fx = learn_ref::random_fixture(120, 100 + seed, {0.6, 0.0, -0.3});
            LogisticOptions o;
            o.lambda = lambda;
            const auto m = fit_logistic_l1(fx.ds, fx.features, "y", o);
            const auto x = learn_ref::standardised(fx, m);
            const auto yc = fx.ds.column("y");
            const std::vector<double> y(yc.begin(), yc.end());
            const double gap = logistic_objective(x, y, m.weights, m.intercept, lambda) -
                               learn_ref::reference_optimum(x, y, lambda);
            worst = std::max(worst, std::abs(gap));
            ++fits;
        }
    }
    // One feature: the weight is zero exactly when lambda exceeds the loss
    // gradient at w = 0 with the intercept at the base-rate log-odds.
    int threshold_ok = 0, threshold_cases = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto fx = learn_ref::random_fixture(300, 200 + seed, {0.05});
        const auto xc = fx.ds.column("x0");
        const auto yc = fx.ds.column("y");
        const double n = static_cast<double>(xc.size());
        const double rate = std::accumulate(yc.begin(), yc.end(), 0.0) / n;
        double mu = 0, var = 0;
        for (double v : xc) mu += v / n;
        for (double v : xc) var += (v - mu) * (v - mu) / n;
        double g0 = 0;
        for (std::size_t i = 0; i < xc.size(); ++i) g0 += (rate - yc[i]) * (xc[i] - mu) / std::sqrt(var) / n;
        const std::string f[] = {"x0"};
        LogisticOptions below, above;
        below.lambda = std::abs(g0) * 1.01;
        above.lambda = std::abs(g0) * 0.5;
        threshold_ok += fit_logistic_l1(fx.ds, f, "y", below).weights[0] == 0.0;
        threshold_ok += fit_logistic_l1(fx.ds, f, "y", above).weights[0] != 0.0;
        threshold_cases += 2;
    }
    std::ostringstream s;
    s << fits << " fits, worst objective gap " << worst << "; soft-threshold " << threshold_ok << "/" << threshold_cases;
    return {worst < kOptimizerGap && threshold_ok == threshold_cases, s.str()};
}

} // namespace

int main() {
    const auto start = Clock::now();
    criterion(1, closed_forms);
    criterion(2, identity_suite);
    criterion(3, faithfulness);
    criterion(4, bootstrapping);
    criterion(5, synthetic_experiment);
    criterion(6, isolation_property);
    criterion(7, tabular);
    criterion(8, optimizer);
    std::printf("%d of 8 criteria failed; %.1f s total\n", failures, seconds_since(start));
    return failures;
}
