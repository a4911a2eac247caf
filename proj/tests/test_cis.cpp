#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "per/bench.hpp"
#include "per/cis.hpp"
#include "per/error.hpp"
#include "per/info.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

using namespace per;

namespace {

double correlation(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

Dataset synthetic(std::size_t n, std::uint64_t seed, double rotation = 45) {
    SyntheticConfig cfg;
    cfg.rotation_deg = rotation;
    return generate_synthetic(cfg, {1, 1}, n, seed);
}

const std::vector<std::string> kVA{"V_A1", "V_A2"};

LearnerSpec linear() {
    LearnerSpec s;
    s.kind = LearnerSpec::Kind::Linear;
    return s;
}

} // namespace

TEST_CASE("one linear model per label stratum") {
    const auto ds = synthetic(4000, 1);
    const auto fs = train_isolation(ds, "V_G", kVA, "Y");
    CHECK(fs.kind == LearnerSpec::Kind::Linear);
    REQUIRE(fs.models.size() == 2);
    CHECK(fs.columns == std::vector<std::string>{"cis_V_G_y0", "cis_V_G_y1"});
    CHECK(fs.models[0].y_value == 0.0);
    CHECK(fs.models[1].y_value == 1.0);
    CHECK(fs.models[0].rows + fs.models[1].rows == 4000);
    CHECK_FALSE(fs.models[0].degenerate);
}

TEST_CASE("ridge fit matches the one-feature closed form") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    const std::size_t n = 500;
    std::vector<double> x(n), t(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = 2 + 3 * z(rng);
        t[i] = 1.5 * x[i] + z(rng);
        y[i] = static_cast<double>(i % 2);
    }
    Dataset ds;
    ds.add_column({"x", ColumnKind::Real, 0, false}, x);
    ds.add_column({"t", ColumnKind::Real, 0, false}, t);
    ds.add_column({"y", ColumnKind::Discrete, 2, false}, y);
    auto spec = linear();
    spec.lambda = 0.1;
    const auto fs = train_isolation(ds, "t", {"x"}, "y", spec);
    for (const auto& m : fs.models) {
        // Standardised slope = cov(x_std, t) / (1 + lambda) on the stratum.
        std::vector<double> xs, ts;
        for (std::size_t i = 0; i < n; ++i)
            if (y[i] == m.y_value) {
                xs.push_back(x[i]);
                ts.push_back(t[i]);
            }
        const double k = static_cast<double>(xs.size());
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / k;
        const double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / k;
        double vx = 0, c = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            vx += (xs[i] - mx) * (xs[i] - mx) / k;
            c += (xs[i] - mx) * (ts[i] - mt) / k;
        }
        CHECK(m.model.weights[0] == doctest::Approx(c / std::sqrt(vx) / 1.1).epsilon(1e-10));
        CHECK(m.model.intercept == doctest::Approx(mt).epsilon(1e-12));
    }
}

TEST_CASE("binary targets use the logistic learner; constant targets are flagged") {
    auto ds = synthetic(2000, 3);
    std::vector<double> b(ds.rows()), c(ds.rows(), 4.0);
    const auto vg = ds.column("V_G");
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = vg[i] > 0 ? 1.0 : 0.0;
    ds.add_column({"B", ColumnKind::Discrete, 2, false}, b);
    ds.add_column({"C", ColumnKind::Real, 0, false}, c);
    const auto fs = train_isolation(ds, "B", kVA, "Y");
    CHECK(fs.kind == LearnerSpec::Kind::Logistic);
    for (double p : predict(fs, fs.models[0], ds)) CHECK((p > 0 && p < 1));

    const auto cfs = train_isolation(ds, "C", kVA, "Y");
    CHECK(cfs.models[0].degenerate);
    CHECK(cfs.models[1].degenerate);
    for (double p : predict(cfs, cfs.models[1], ds)) CHECK(p == 4.0);

    LearnerSpec logistic;
    logistic.kind = LearnerSpec::Kind::Logistic;
    CHECK_THROWS_AS(train_isolation(ds, "V_G", kVA, "Y", logistic), InputError);
}

TEST_CASE("input errors") {
    const auto ds = synthetic(2000, 4);
    CHECK_THROWS_AS(train_isolation(ds, "V_G", {"nope"}, "Y"), InputError);
    CHECK_THROWS_AS(train_isolation(ds, "V_G", {}, "Y"), InputError);
    CHECK_THROWS_AS(train_isolation(ds, "V_G", kVA, "V_B"), InputError); // label not discrete
    CHECK_THROWS_AS(train_isolation(ds.select_rows(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}), "V_G",
                                    kVA, "Y"),
                    InputError);
    const auto fs = train_isolation(ds, "V_G", kVA, "Y");
    const std::string keep[] = {"V_G", "Y"};
    CHECK_THROWS_AS(emit_features(fs, ds.select_columns(keep)), InputError);
}

TEST_CASE("emission appends one column per stratum without refitting") {
    const auto ds = synthetic(3000, 5);
    auto [train, test] = ds.split(0.5, 9);
    const auto fs = train_isolation(train, "V_G", kVA, "Y");
    const auto a = emit_features(fs, test);
    CHECK(a.rows() == test.rows());
    CHECK(a.cols() == test.cols() + 2);
    const auto full = emit_features(fs, ds);
    // Emitting on a subset gives the same values as the subset of a full emission.
    std::vector<std::size_t> rows{0, 5, 17, 2999};
    const auto sub = emit_features(fs, ds.select_rows(rows));
    for (std::size_t k = 0; k < rows.size(); ++k)
        CHECK(sub.column("cis_V_G_y1")[k] == full.column("cis_V_G_y1")[rows[k]]);
    // Refitting reproduces identical parameters.
    const auto again = train_isolation(train, "V_G", kVA, "Y");
    CHECK(again.models[0].model.weights == fs.models[0].model.weights);
    CHECK(again.models[1].model.intercept == fs.models[1].model.intercept);
}

TEST_CASE("stratum models only see their own rows") {
    const auto ds = synthetic(3000, 6);
    const auto y = ds.column("Y");
    // Shuffle the values of the Y=0 rows among themselves.
    std::vector<std::size_t> zeros;
    for (std::size_t i = 0; i < ds.rows(); ++i)
        if (y[i] == 0.0) zeros.push_back(i);
    auto shuffled = zeros;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(1));
    std::vector<std::size_t> order(ds.rows());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = 0; k < zeros.size(); ++k) order[zeros[k]] = shuffled[k];
    const auto permuted = ds.select_rows(order);
    const auto a = train_isolation(ds, "V_G", kVA, "Y");
    const auto b = train_isolation(permuted, "V_G", kVA, "Y");
    CHECK(a.models[1].model.weights == b.models[1].model.weights);
    CHECK(a.models[1].model.intercept == b.models[1].model.intercept);
    CHECK(a.models[1].model.mean == b.models[1].model.mean);
}

TEST_CASE("emitted features track the good component of a rotated proxy") {
    for (double angle : {45.0, 30.0}) {
        const auto ds = synthetic(20000, 7, angle);
        const auto fs = train_isolation(ds, "V_G", kVA, "Y");
        const auto out = emit_features(fs, ds);
        for (const auto& col : fs.columns) {
            const double cg = std::abs(correlation(out.column(col), ds.column("V_A_G")));
            const double cb = std::abs(correlation(out.column(col), ds.column("V_A_B")));
            INFO(col << " angle " << angle << " corr good " << cg << " bad " << cb);
            if (angle == 45.0) CHECK(cg > 2 * cb);
        }
    }
}

TEST_CASE("improvement condition") {
    const auto ds = synthetic(5000, 8);
    const auto met = check_improvement(ds, "V_G", kVA, "Y");
    CHECK(met.condition_met);
    CHECK(met.pooled_error > met.stratified_error);
    CHECK(met.loss == "squared");
    CHECK(met.stratum_weights.size() == 2);
    CHECK(met.stratum_weights[0] + met.stratum_weights[1] == doctest::Approx(1.0));

    // Target independent of the label given the source.
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    Dataset ind;
    std::vector<double> s(5000), t(5000), y(5000);
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = z(rng);
        t[i] = s[i] + 0.5 * z(rng);
        y[i] = static_cast<double>(rng() % 2);
    }
    ind.add_column({"s", ColumnKind::Real, 0, false}, s);
    ind.add_column({"t", ColumnKind::Real, 0, false}, t);
    ind.add_column({"y", ColumnKind::Discrete, 2, false}, y);
    const auto flat = check_improvement(ind, "t", {"s"}, "y");
    CHECK(std::abs(flat.pooled_error - flat.stratified_error) < 0.01 * flat.pooled_error);
    ImprovementOptions margin;
    margin.margin = 0.01 * flat.pooled_error;
    CHECK_FALSE(check_improvement(ind, "t", {"s"}, "y", {}, margin).condition_met);

    // Deterministic under a fixed seed.
    const auto again = check_improvement(ds, "V_G", kVA, "Y");
    CHECK(again.pooled_error == met.pooled_error);

    std::vector<double> one(5000, 1.0);
    ind.add_column({"one", ColumnKind::Discrete, 1, false}, one);
    CHECK_THROWS_AS(check_improvement(ind, "t", {"s"}, "one"), InputError);
    CHECK_THROWS_AS(check_improvement(ind.select_rows(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}),
                                      "t", {"s"}, "y"),
                    InputError);
}

TEST_CASE("oracle isolation by inverting the mixing") {
    const auto ds = synthetic(1000, 9);
    const double t = std::numbers::pi / 4;
    const std::vector<std::vector<double>> rot{{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}};
    const auto out = oracle_isolation_linear(ds, kVA, rot, {"G", "B"});
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        CHECK(std::abs(out.column("G")[i] - ds.column("V_A_G")[i]) < 1e-12);
        CHECK(std::abs(out.column("B")[i] - ds.column("V_A_B")[i]) < 1e-12);
    }
    const auto same = oracle_isolation_linear(ds, kVA, {{1, 0}, {0, 1}}, {"a", "b"});
    for (std::size_t i = 0; i < ds.rows(); ++i) CHECK(same.column("a")[i] == ds.column("V_A1")[i]);
    CHECK_THROWS_AS(oracle_isolation_linear(ds, kVA, {{1, 2}, {2, 4}}, {"a", "b"}), InputError);
    CHECK_THROWS_AS(oracle_isolation_linear(ds, kVA, {{1, 0}}, {"a", "b"}), InputError);
}

TEST_CASE("engineered features do not raise context sensitivity to the bad mechanism") {
    // Largest plug-in I(Y : M_B | x) over permutations of M_B, which make the
    // true value zero; this is the estimator noise band for that conditioning set.
    auto estimate_and_band = [](const Dataset& d, const std::vector<std::string>& x) {
        Binning b;
        b.bins = 4;
        const std::string y[] = {"Y"}, m[] = {"M_B"};
        const double est = estimate_mi(d, y, m, x, b).bits;
        const auto col = d.column("M_B");
        std::vector<double> mb(col.begin(), col.end());
        std::mt19937_64 rng(5);
        double band = 0;
        for (int p = 0; p < 20; ++p) {
            std::shuffle(mb.begin(), mb.end(), rng);
            Dataset shuffled = d.select_columns(x);
            shuffled.add_column({"Y", ColumnKind::Discrete, 2, false}, {d.column("Y").begin(), d.column("Y").end()});
            shuffled.add_column({"M_B", ColumnKind::Real, 0, false}, mb);
            band = std::max(band, estimate_mi(shuffled, y, m, x, b).bits);
        }
        return std::pair{est, band};
    };
    const auto ds = synthetic(60000, 10);
    auto [train, test] = ds.split(0.5, 2);
    const auto fs = train_isolation(train, "V_G", kVA, "Y");
    const auto out = emit_features(fs, test);
    std::vector<std::string> base{"V_G"}, eng{"V_G"};
    eng.insert(eng.end(), fs.columns.begin(), fs.columns.end());
    const auto [b_est, b_band] = estimate_and_band(out, base);
    const auto [e_est, e_band] = estimate_and_band(out, eng);
    INFO("base " << b_est << " band " << b_band << "; engineered " << e_est << " band " << e_band);
    CHECK(b_est <= b_band);
    CHECK(e_est <= e_band);
    // The raw ambiguous proxies do open the path to M_B.
    std::vector<std::string> raw{"V_G", "V_A1", "V_A2"};
    const auto [r_est, r_band] = estimate_and_band(out, raw);
    INFO("raw " << r_est << " band " << r_band);
    CHECK(r_est > r_band);
}
