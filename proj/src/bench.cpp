#include "per/bench.hpp"

#include "per/cis.hpp"
#include "per/error.hpp"
#include "per/learn.hpp"
#include "per/parallel.hpp"

#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace per {

void validate(const SyntheticConfig& cfg) {
    if (!(cfg.sigma_mg > 0 && cfg.sigma_mb > 0 && cfg.noise_sd > 0)) throw InputError("standard deviations must be > 0");
    if (!(cfg.flip_prob >= 0 && cfg.flip_prob < 0.5)) throw InputError("flip_prob must be in [0, 0.5)");
    if (cfg.n_train < 10 || cfg.n_test < 1) throw InputError("n_train must be >= 10 and n_test >= 1");
    if (cfg.repetitions < 1) throw InputError("repetitions must be >= 1");
    if (!std::isfinite(cfg.rotation_deg)) throw InputError("rotation_deg must be finite");
}

namespace {

std::vector<std::vector<double>> rotation(double deg) {
    const double t = deg * std::numbers::pi / 180.0;
    return {{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}};
}

void summarise(MethodStats& m) {
    auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
        mean = 0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0;
        for (double x : v) var += (x - mean) * (x - mean);
        sd = std::sqrt(var / static_cast<double>(v.size()));
    };
    stats(m.accuracy, m.accuracy_mean, m.accuracy_sd);
    stats(m.f1, m.f1_mean, m.f1_sd);
}

std::string sigma_name(const Environment& e) {
    std::ostringstream s;
    s << "sigma_mg=" << e.sigma_mg << ",sigma_mb=" << e.sigma_mb;
    return s.str();
}

// Per repetition: [condition][method] -> metrics.
using RepResult = std::vector<std::vector<EvalMetrics>>;

// Runs `body(rep)` for every repetition in parallel and assembles the report.
template <class Body>
void collect(BenchReport& rep, const std::vector<std::string>& methods, int reps, Body body) {
    std::vector<RepResult> results(static_cast<std::size_t>(reps));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(reps));
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < reps; ++r) {
        try {
            results[static_cast<std::size_t>(r)] = body(r);
        } catch (...) {
            errors[static_cast<std::size_t>(r)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (std::size_t c = 0; c < rep.conditions.size(); ++c) {
        auto& cond = rep.conditions[c];
        for (std::size_t m = 0; m < methods.size(); ++m) {
            MethodStats s;
            s.method = methods[m];
            for (const auto& r : results) {
                s.accuracy.push_back(r[c][m].accuracy);
                s.f1.push_back(r[c][m].f1);
            }
            summarise(s);
            cond.methods.push_back(std::move(s));
        }
    }
}

} // namespace

const MethodStats& ConditionResult::method(const std::string& n) const {
    for (const auto& m : methods)
        if (m.method == n) return m;
    throw InputError("no method '" + n + "' in condition " + name);
}

Dataset generate_synthetic(const SyntheticConfig& cfg, const Environment& env, std::size_t n, std::uint64_t seed) {
    if (!(env.sigma_mg > 0 && env.sigma_mb > 0)) throw InputError("environment standard deviations must be > 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto rot = rotation(cfg.rotation_deg);
    const double e = cfg.noise_sd;
    std::vector<std::vector<double>> c(11, std::vector<double>(n));
    enum { MG, MB, UG, UB, AG, AB, Y, VG, VB, A1, A2 };
    for (std::size_t i = 0; i < n; ++i) {
        const double mg = env.sigma_mg * z(rng);
        const double mb = env.sigma_mb * z(rng);
        const double ug = mg + e * z(rng);
        double y = ug > 0 ? 1.0 : 0.0;
        if (u(rng) < cfg.flip_prob) y = 1.0 - y;
        const double ub = ((2 * y - 1) + mb) / 2 + e * z(rng);
        const double vg = ug + e * z(rng);
        const double vb = ub + e * z(rng);
        const double ag = ug + e * z(rng);
        const double ab = ub + e * z(rng);
        c[MG][i] = mg;
        c[MB][i] = mb;
        c[UG][i] = ug;
        c[UB][i] = ub;
        c[AG][i] = ag;
        c[AB][i] = ab;
        c[Y][i] = y;
        c[VG][i] = vg;
        c[VB][i] = vb;
        c[A1][i] = rot[0][0] * ag + rot[0][1] * ab;
        c[A2][i] = rot[1][0] * ag + rot[1][1] * ab;
    }
    Dataset ds;
    const char* names[] = {"M_G", "M_B", "U_G", "U_B", "V_A_G", "V_A_B", "Y", "V_G", "V_B", "V_A1", "V_A2"};
    for (int k = 0; k < 11; ++k) {
        ColumnInfo info{names[k], k == Y ? ColumnKind::Discrete : ColumnKind::Real, k == Y ? 2 : 0, k < Y};
        ds.add_column(info, std::move(c[static_cast<std::size_t>(k)]));
    }
    return ds;
}

std::vector<Environment> default_sweep(bool shift_good) {
    std::vector<Environment> out;
    for (double s : {1.0, 2.0, 4.0, 8.0}) out.push_back(shift_good ? Environment{s, 1.0} : Environment{1.0, s});
    return out;
}

BenchReport run_synthetic_sweep(const SyntheticConfig& cfg, const std::vector<Environment>& sweep) {
    validate(cfg);
    if (sweep.empty()) throw InputError("empty sweep");
    BenchReport rep;
    rep.kind = "synthetic";
    rep.repetitions = cfg.repetitions;
    rep.seed = cfg.seed;
    for (const auto& e : sweep) rep.conditions.push_back({sigma_name(e), e.sigma_mg, e.sigma_mb, {}});
    const std::vector<std::string> methods{kAllFeatures, kLimitedFeatures, kEngineeredFeatures, kOracleComponent};
    const auto mixing = rotation(cfg.rotation_deg);
    const std::vector<std::string> va{"V_A1", "V_A2"}, recovered{"V_A_G_hat", "V_A_B_hat"};
    collect(rep, methods, cfg.repetitions, [&](int r) {
        const std::uint64_t s = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
        auto train = generate_synthetic(cfg, {cfg.sigma_mg, cfg.sigma_mb}, cfg.n_train, derive_seed(s, 0));
        LearnerSpec spec;
        spec.kind = LearnerSpec::Kind::Linear;
        spec.lambda = cfg.lambda;
        const auto fs = train_isolation(train, "V_G", va, "Y", spec);
        train = oracle_isolation_linear(emit_features(fs, train), va, mixing, recovered);
        std::vector<std::vector<std::string>> feats{
            {"V_G", "V_A1", "V_A2"}, {"V_G"}, {"V_G"}, {"V_G", "V_A_G_hat"}};
        feats[2].insert(feats[2].end(), fs.columns.begin(), fs.columns.end());
        LogisticOptions lo;
        lo.lambda = cfg.lambda;
        std::vector<LinearModel> models;
        for (const auto& f : feats) models.push_back(fit_logistic_l1(train, f, "Y", lo));
        RepResult out;
        for (std::size_t k = 0; k < sweep.size(); ++k) {
            auto test = generate_synthetic(cfg, sweep[k], cfg.n_test, derive_seed(s, 1 + k));
            test = oracle_isolation_linear(emit_features(fs, test), va, mixing, recovered);
            std::vector<EvalMetrics> row;
            for (const auto& m : models) row.push_back(evaluate(m, test, "Y"));
            out.push_back(std::move(row));
        }
        return out;
    });
    rep.notes.push_back("training environment sigma_mg=" + std::to_string(cfg.sigma_mg) +
                        " sigma_mb=" + std::to_string(cfg.sigma_mb));
    return rep;
}

Ingested ingest_tabular(const std::string& path, const TabularConfig& cfg) {
    if (!std::filesystem::exists(path)) throw InputError("missing file '" + path + "'");
    const Dataset raw = read_csv(path, 0);
    const std::vector<std::string> required{cfg.education, cfg.insurance, cfg.commute, cfg.income};
    for (const auto& c : required)
        if (!raw.has(c)) throw InputError("missing column '" + c + "' in " + path);
    Ingested out;
    out.rows_read = raw.rows();
    std::vector<char> keep(raw.rows(), 1);
    for (const auto& f : cfg.filters) {
        if (!raw.has(f.column)) {
            out.notes.push_back("filter on " + f.column + " skipped: column absent");
            continue;
        }
        const auto col = raw.column(f.column);
        for (std::size_t r = 0; r < raw.rows(); ++r) {
            const bool ok = f.op == RowFilter::Op::Greater ? col[r] > f.value : col[r] >= f.value;
            if (!ok) keep[r] = 0;
        }
    }
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < raw.rows(); ++r) {
        if (!keep[r]) {
            ++out.filtered;
            continue;
        }
        bool complete = true;
        for (const auto& c : required) complete &= !std::isnan(raw.column(c)[r]);
        if (!complete) {
            ++out.dropped_missing;
            continue;
        }
        rows.push_back(r);
    }
    const auto sub = raw.select_rows(rows);
    std::vector<double> ins(sub.rows()), y(sub.rows());
    const auto hi = sub.column(cfg.insurance);
    const auto inc = sub.column(cfg.income);
    for (std::size_t r = 0; r < sub.rows(); ++r) {
        if (hi[r] == 1.0)
            ins[r] = 1.0;
        else if (hi[r] == 2.0)
            ins[r] = 0.0;
        else
            throw InputError("unexpected " + cfg.insurance + " code " + std::to_string(hi[r]) + " in " + path);
        y[r] = inc[r] > cfg.threshold ? 1.0 : 0.0;
    }
    out.data.add_column({cfg.education, ColumnKind::Real, 0, false},
                        {sub.column(cfg.education).begin(), sub.column(cfg.education).end()});
    out.data.add_column({cfg.insurance, ColumnKind::Discrete, 2, false}, std::move(ins));
    out.data.add_column({cfg.commute, ColumnKind::Real, 0, false},
                        {sub.column(cfg.commute).begin(), sub.column(cfg.commute).end()});
    out.data.add_column({"y", ColumnKind::Discrete, 2, false}, std::move(y));
    out.notes.push_back(path + ": " + std::to_string(out.rows_read) + " rows read, " + std::to_string(out.filtered) +
                        " filtered, " + std::to_string(out.dropped_missing) + " dropped for missing values");
    out.notes.push_back(cfg.insurance + " mapped 1 -> 1, 2 -> 0");
    return out;
}

BenchReport run_tabular(const TabularConfig& cfg) {
    if (cfg.repetitions < 1) throw InputError("repetitions must be >= 1");
    const auto train = ingest_tabular(cfg.train_csv, cfg);
    const auto test = ingest_tabular(cfg.test_csv, cfg);
    BenchReport rep;
    rep.kind = "tabular";
    rep.repetitions = cfg.repetitions;
    rep.seed = cfg.seed;
    rep.conditions.push_back({"in_domain", 0, 0, {}});
    rep.conditions.push_back({"out_of_domain", 0, 0, {}});
    rep.notes = train.notes;
    rep.notes.insert(rep.notes.end(), test.notes.begin(), test.notes.end());
    if (!cfg.state.empty()) rep.notes.push_back("state " + cfg.state);
    const std::vector<std::string> methods{kAllFeatures, kLimitedFeatures, kEngineeredFeatures};
    const std::vector<std::string> source{cfg.insurance, cfg.commute};
    collect(rep, methods, cfg.repetitions, [&](int r) {
        auto [fit_part, held] = train.data.split(cfg.train_fraction, derive_seed(cfg.seed, static_cast<std::uint64_t>(r)));
        LearnerSpec spec;
        spec.kind = LearnerSpec::Kind::Linear;
        spec.lambda = cfg.lambda;
        const auto fs = train_isolation(fit_part, cfg.education, source, "y", spec);
        std::vector<std::vector<std::string>> feats{{cfg.education, cfg.insurance, cfg.commute}, {cfg.education},
                                                    {cfg.education}};
        feats[2].insert(feats[2].end(), fs.columns.begin(), fs.columns.end());
        const auto fit_e = emit_features(fs, fit_part), held_e = emit_features(fs, held),
                   test_e = emit_features(fs, test.data);
        LogisticOptions lo;
        lo.lambda = cfg.lambda;
        RepResult out(2);
        for (const auto& f : feats) {
            const auto m = fit_logistic_l1(fit_e, f, "y", lo);
            out[0].push_back(evaluate(m, held_e, "y"));
            out[1].push_back(evaluate(m, test_e, "y"));
        }
        return out;
    });
    return rep;
}

BenchReport run_tabular_states(const std::string& dir, const TabularConfig& base) {
    const auto states = discover_states(dir);
    if (states.empty()) throw InputError("no <STATE>_2019.csv / <STATE>_2021.csv pairs in '" + dir + "'");
    BenchReport rep;
    rep.kind = "tabular";
    rep.repetitions = base.repetitions;
    rep.seed = base.seed;
    for (const auto& [state, train, test] : states) {
        auto cfg = base;
        cfg.state = state;
        cfg.train_csv = train;
        cfg.test_csv = test;
        auto one = run_tabular(cfg);
        for (auto& c : one.conditions) {
            c.name = state + ":" + c.name;
            rep.conditions.push_back(std::move(c));
        }
        rep.notes.insert(rep.notes.end(), one.notes.begin(), one.notes.end());
    }
    return rep;
}

void write_tabular_fixture(const std::string& path, std::size_t rows, std::uint64_t seed) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write '" + path + "'");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    f << "AGEP,PINCP,WKHP,PWGTP,SCHL,HINS4,JWMNP\n";
    for (std::size_t i = 0; i < rows; ++i) {
        const double skill = z(rng);
        const int schl = std::clamp(static_cast<int>(std::lround(18 + 3 * skill + z(rng))), 1, 24);
        const int hins4 = u(rng) < 1 / (1 + std::exp(1.5 + 1.2 * skill)) ? 1 : 2;
        const int commute = std::clamp(static_cast<int>(std::lround(25 + 8 * skill + 15 * z(rng))), 1, 150);
        const double income = std::max(200.0, std::exp(10.5 + 0.45 * skill + 0.4 * z(rng)));
        f << 20 + static_cast<int>(rng() % 45) << ',' << std::lround(income) << ',' << 10 + static_cast<int>(rng() % 50)
          << ',' << 1 + static_cast<int>(rng() % 200) << ',' << schl << ',' << hins4 << ',' << commute << '\n';
    }
}

std::vector<std::tuple<std::string, std::string, std::string>> discover_states(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw InputError("not a directory: '" + dir + "'");
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        const std::string suffix = "_2019.csv";
        if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
            continue;
        const auto state = name.substr(0, name.size() - suffix.size());
        const auto later = entry.path().parent_path() / (state + "_2021.csv");
        if (fs::exists(later)) out.emplace_back(state, entry.path().string(), later.string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace per
