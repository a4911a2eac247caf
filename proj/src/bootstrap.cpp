#include "per/bootstrap.hpp"

#include "per/error.hpp"
#include "per/info.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace per {

int DependenceGraph::index(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw InputError("unknown proxy '" + name + "'");
    return static_cast<int>(it - names.begin());
}

bool DependenceGraph::has_edge(int i, int j) const {
    const auto e = std::make_pair(std::min(i, j), std::max(i, j));
    return std::find(edges.begin(), edges.end(), e) != edges.end();
}

std::vector<int> DependenceGraph::neighbours(int i) const {
    std::vector<int> out;
    for (const auto& [a, b] : edges) {
        if (a == i) out.push_back(b);
        if (b == i) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

DependenceGraph dependence_graph_oracle(const DistributionShiftDiagram& dsd) {
    if (const auto v = validate_dsd(dsd); !v.empty()) throw InputError("invalid diagram: " + v.front().message);
    const auto& g = dsd.dag();
    const auto proxies = dsd.proxies();
    const VertexSet ys{dsd.label()};
    const VertexSet causes = set_intersection(dsd.hidden(), make_set({g.parents(ys[0]).begin(), g.parents(ys[0]).end()}));
    auto parents = [&](VertexId v) { return make_set({g.parents(v).begin(), g.parents(v).end()}); };
    DependenceGraph out;
    for (VertexId v : proxies) out.names.push_back(g.name(v));
    for (std::size_t i = 0; i < proxies.size(); ++i) {
        for (std::size_t j = i + 1; j < proxies.size(); ++j) {
            const VertexSet a{proxies[i]}, b{proxies[j]};
            if (d_separated(g, a, b, ys)) continue;
            const auto pa = parents(proxies[i]), pb = parents(proxies[j]);
            const bool shared = !set_intersection(pa, pb).empty();
            const bool both_causes =
                !set_intersection(pa, causes).empty() && !set_intersection(pb, causes).empty();
            if (!shared && !both_causes)
                throw std::logic_error("dependence edge " + g.name(proxies[i]) + " - " + g.name(proxies[j]) +
                                       " has neither a shared parent nor cause parents");
            out.edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
    }
    return out;
}

double g_test_pvalue(const std::vector<int>& a, const std::vector<int>& b) {
    int ra = 0, cb = 0;
    for (std::size_t r = 0; r < a.size(); ++r)
        if (a[r] >= 0 && b[r] >= 0) {
            ra = std::max(ra, a[r] + 1);
            cb = std::max(cb, b[r] + 1);
        }
    if (ra == 0) return 1.0;
    std::vector<double> obs(static_cast<std::size_t>(ra * cb), 0.0), row(static_cast<std::size_t>(ra), 0.0),
        col(static_cast<std::size_t>(cb), 0.0);
    double n = 0;
    for (std::size_t r = 0; r < a.size(); ++r) {
        if (a[r] < 0 || b[r] < 0) continue;
        obs[static_cast<std::size_t>(a[r] * cb + b[r])] += 1;
        row[static_cast<std::size_t>(a[r])] += 1;
        col[static_cast<std::size_t>(b[r])] += 1;
        n += 1;
    }
    const auto nonempty = [](const std::vector<double>& v) {
        return static_cast<int>(std::count_if(v.begin(), v.end(), [](double x) { return x > 0; }));
    };
    const int df = (nonempty(row) - 1) * (nonempty(col) - 1);
    if (df <= 0) return 1.0;
    double g = 0;
    for (int i = 0; i < ra; ++i)
        for (int j = 0; j < cb; ++j) {
            const double o = obs[static_cast<std::size_t>(i * cb + j)];
            if (o > 0) g += o * std::log(o * n / (row[static_cast<std::size_t>(i)] * col[static_cast<std::size_t>(j)]));
        }
    g = std::max(0.0, 2.0 * g);
    return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), g));
}

namespace {

struct PairResult {
    bool edge = false;
    bool undetermined = false;
};

struct Prepared {
    std::vector<std::vector<int>> codes; // per proxy
    std::vector<std::vector<std::size_t>> strata;
};

Prepared prepare(const Dataset& ds, const std::string& y, const std::vector<std::string>& proxies,
                 const CiTestOptions& opts) {
    if (opts.alpha_level <= 0 || opts.alpha_level >= 1) throw InputError("alpha_level must be in (0, 1)");
    if (ds.info(y).kind != ColumnKind::Discrete) throw InputError("label column '" + y + "' must be discrete");
    Prepared p;
    for (auto& [_, rows] : ds.strata(y)) p.strata.push_back(std::move(rows));
    if (p.strata.size() < 2) throw InputError("label column '" + y + "' needs at least two values");
    for (const auto& name : proxies) {
        if (name == y) throw InputError("label column listed as a proxy");
        p.codes.push_back(discretize(ds.column(name), ds.info(name).kind, opts.bins));
    }
    return p;
}

PairResult test_pair(const Prepared& p, std::size_t i, std::size_t j, const CiTestOptions& opts) {
    double stat = 0;
    int k = 0;
    std::vector<int> a, b;
    for (const auto& rows : p.strata) {
        a.clear();
        b.clear();
        for (std::size_t r : rows) {
            const int x = p.codes[i][r], z = p.codes[j][r];
            if (x < 0 || z < 0) continue;
            a.push_back(x);
            b.push_back(z);
        }
        if (a.size() < opts.min_stratum) return {false, true};
        stat += -2.0 * std::log(std::max(g_test_pvalue(a, b), 1e-300));
        ++k;
    }
    const double pv = boost::math::cdf(boost::math::complement(boost::math::chi_squared(2.0 * k), stat));
    return {pv < opts.alpha_level, false};
}

DependenceGraph assemble(const std::vector<std::string>& proxies, const std::vector<std::pair<int, int>>& pairs,
                         const std::vector<PairResult>& res) {
    DependenceGraph g;
    g.names = proxies;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (res[k].undetermined)
            g.undetermined.push_back(pairs[k]);
        else if (res[k].edge)
            g.edges.push_back(pairs[k]);
    }
    return g;
}

std::vector<std::pair<int, int>> all_pairs(std::size_t n) {
    std::vector<std::pair<int, int>> out;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return out;
}

} // namespace

DependenceGraph dependence_graph_statistical(const Dataset& ds, const std::string& y,
                                             const std::vector<std::string>& proxies, const CiTestOptions& opts) {
    const auto p = prepare(ds, y, proxies, opts);
    const auto pairs = all_pairs(proxies.size());
    std::vector<PairResult> res(pairs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < pairs.size(); ++k)
        res[k] = test_pair(p, static_cast<std::size_t>(pairs[k].first), static_cast<std::size_t>(pairs[k].second), opts);
    return assemble(proxies, pairs, res);
}

DependenceGraph dependence_graph_statistical_serial(const Dataset& ds, const std::string& y,
                                                    const std::vector<std::string>& proxies,
                                                    const CiTestOptions& opts) {
    const auto p = prepare(ds, y, proxies, opts);
    const auto pairs = all_pairs(proxies.size());
    std::vector<PairResult> res(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k)
        res[k] = test_pair(p, static_cast<std::size_t>(pairs[k].first), static_cast<std::size_t>(pairs[k].second), opts);
    return assemble(proxies, pairs, res);
}

std::string_view to_string(LabelClass c) {
    switch (c) {
    case LabelClass::Good: return "good";
    case LabelClass::Bad: return "bad";
    case LabelClass::Ambiguous: return "ambiguous";
    case LabelClass::Unlabeled: return "unlabeled";
    }
    return "?";
}

LabelState bootstrap_labels(const DependenceGraph& g, const SeedSet& seeds) {
    LabelState out;
    for (const auto& n : g.names) out[n];
    for (const auto& [name, cls] : seeds) {
        const int i = g.index(name);
        if (cls == ProxyClass::Ambiguous) continue;
        for (int j : g.neighbours(i)) {
            auto& l = out[g.names[static_cast<std::size_t>(j)]];
            (cls == ProxyClass::Good ? l.good : l.bad) = true;
        }
    }
    for (auto& [name, l] : out) {
        if (const auto s = seeds.find(name); s != seeds.end()) {
            l.seed = true;
            l.good = s->second != ProxyClass::Bad;
            l.bad = s->second != ProxyClass::Good;
        }
        l.cls = l.good && l.bad ? LabelClass::Ambiguous
                : l.good        ? LabelClass::Good
                : l.bad         ? LabelClass::Bad
                                : LabelClass::Unlabeled;
    }
    return out;
}

bool SeedReport::passed() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const SeedCondition& c) { return c.passed || c.skipped; });
}

SeedReport verify_seed_conditions(const DistributionShiftDiagram& dsd, const SeedSet& seeds) {
    const auto& g = dsd.dag();
    std::map<VertexId, ProxyClass> by_id;
    for (const auto& [name, cls] : seeds) {
        const VertexId v = g.id(name);
        if (dsd.role(v) != VertexRole::Proxy) throw InputError("seed '" + name + "' is not a proxy");
        by_id[v] = cls;
    }
    const auto hp = classify_hidden(dsd);
    const VertexId y = dsd.label();
    // Seeds of class `cls` among the children of u.
    auto seed_children = [&](VertexId u, ProxyClass cls) {
        std::vector<std::string> out;
        for (VertexId c : g.children(u))
            if (const auto it = by_id.find(c); it != by_id.end() && it->second == cls) out.push_back(g.name(c));
        return out;
    };
    auto per_hidden = [&](int index, const VertexSet& us, ProxyClass cls) {
        SeedCondition c;
        c.index = index;
        for (VertexId u : us) {
            const auto w = seed_children(u, cls);
            if (w.empty()) c.missing.push_back(g.name(u));
            c.witnesses.insert(c.witnesses.end(), w.begin(), w.end());
        }
        c.passed = c.missing.empty();
        return c;
    };

    SeedReport r;
    SeedCondition c1;
    c1.index = 1;
    c1.skipped = true;
    c1.note = "partial faithfulness is an assumption and cannot be checked from the graph";
    r.conditions.push_back(c1);

    VertexSet good_effects;
    for (VertexId u : hp.good)
        if (g.has_edge(y, u)) good_effects.push_back(u);
    r.conditions.push_back(per_hidden(2, good_effects, ProxyClass::Good));

    SeedCondition c3;
    c3.index = 3;
    VertexSet causes;
    for (VertexId u : g.parents(y)) causes.push_back(u);
    if (causes.empty()) {
        c3.passed = true;
        c3.note = "Y has no hidden parents";
    } else {
        for (VertexId u : causes) {
            const auto w = seed_children(u, ProxyClass::Good);
            c3.witnesses.insert(c3.witnesses.end(), w.begin(), w.end());
        }
        std::sort(c3.witnesses.begin(), c3.witnesses.end());
        c3.witnesses.erase(std::unique(c3.witnesses.begin(), c3.witnesses.end()), c3.witnesses.end());
        c3.passed = !c3.witnesses.empty();
        if (!c3.passed)
            for (VertexId u : causes) c3.missing.push_back(g.name(u));
    }
    r.conditions.push_back(c3);

    r.conditions.push_back(per_hidden(4, hp.bad, ProxyClass::Bad));
    return r;
}

} // namespace per
