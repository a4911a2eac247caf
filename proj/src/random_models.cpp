#include "per/random_models.hpp"

#include "per/error.hpp"

#include <algorithm>
#include <numeric>

namespace per {

namespace {

struct Builder {
    std::vector<std::string> names;
    std::vector<VertexRole> roles;
    std::vector<Edge> edges;

    VertexId add(std::string name, VertexRole role) {
        names.push_back(std::move(name));
        roles.push_back(role);
        return static_cast<VertexId>(names.size() - 1);
    }
    void edge(VertexId p, VertexId c) { edges.push_back({p, c}); }
    DistributionShiftDiagram build() { return {Dag(names, edges), roles}; }
};

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

std::vector<int> random_perm(std::mt19937_64& rng, int k) {
    std::vector<int> p(static_cast<std::size_t>(k));
    std::iota(p.begin(), p.end(), 0);
    for (std::size_t i = p.size(); i > 1; --i) std::swap(p[i - 1], p[rng() % i]);
    return p;
}

std::vector<double> random_dist(std::mt19937_64& rng, int k) {
    std::vector<double> d(static_cast<std::size_t>(k));
    double total = 0;
    for (auto& x : d) {
        x = 0.1 + unit(rng);
        total += x;
    }
    for (auto& x : d) x /= total;
    return d;
}

} // namespace

DistributionShiftDiagram mixed_example_dsd() {
    Builder b;
    const auto y = b.add("Y", VertexRole::Label);
    const auto u1 = b.add("U1", VertexRole::Hidden);
    const auto u2 = b.add("U2", VertexRole::Hidden);
    const auto u3 = b.add("U3", VertexRole::Hidden);
    const auto m1 = b.add("M1", VertexRole::Mechanism);
    const auto m2 = b.add("M2", VertexRole::Mechanism);
    const auto m3 = b.add("M3", VertexRole::Mechanism);
    VertexId v[8];
    for (int i = 1; i <= 7; ++i) v[i] = b.add("V" + std::to_string(i), VertexRole::Proxy);
    b.edge(u1, y);
    b.edge(y, u2);
    b.edge(y, u3);
    b.edge(m1, u1);
    b.edge(m2, u2);
    b.edge(u3, m3);
    for (int i : {1, 2, 3, 6}) b.edge(u1, v[i]);
    for (int i : {3, 4, 5, 6}) b.edge(u2, v[i]);
    for (int i : {2, 5, 6, 7}) b.edge(u3, v[i]);
    return b.build();
}

DistributionShiftDiagram separable_example_dsd() {
    Builder b;
    const auto mg = b.add("M_G", VertexRole::Mechanism);
    const auto ug = b.add("U_G", VertexRole::Hidden);
    const auto y = b.add("Y", VertexRole::Label);
    const auto ub = b.add("U_B", VertexRole::Hidden);
    const auto mb = b.add("M_B", VertexRole::Mechanism);
    const auto vg = b.add("V_G", VertexRole::Proxy);
    const auto vb = b.add("V_B", VertexRole::Proxy);
    const auto va = b.add("V_A", VertexRole::Proxy);
    b.edge(mg, ug);
    b.edge(ug, y);
    b.edge(y, ub);
    b.edge(mb, ub);
    b.edge(ug, vg);
    b.edge(ub, vb);
    b.edge(ug, va);
    b.edge(ub, va);
    return b.build();
}

DropoutScm separable_example_scm(const SeparableAlphas& a, int mechanism_symbols) {
    if (mechanism_symbols < 1) throw InputError("mechanism alphabet must be non-empty");
    auto dsd = separable_example_dsd();
    const auto& g = dsd.dag();
    auto alpha_of = [&](const Edge& e) {
        const auto& p = g.name(e.parent);
        const auto& c = g.name(e.child);
        if (p == "M_G") return a.mg_ug;
        if (p == "U_G" && c == "Y") return a.ug_y;
        if (p == "Y") return a.y_ub;
        if (p == "M_B") return a.mb_ub;
        if (c == "V_G") return a.ug_vg;
        if (c == "V_B") return a.ub_vb;
        if (p == "U_G") return a.ug_va;
        return a.ub_va;
    };
    std::vector<EdgeParams> params;
    for (const auto& e : g.edges()) params.push_back({alpha_of(e), {}});
    const std::vector<double> uniform(static_cast<std::size_t>(mechanism_symbols), 1.0 / mechanism_symbols);
    std::map<VertexId, std::vector<double>> roots{{g.id("M_G"), uniform}, {g.id("M_B"), uniform}};
    return DropoutScm(std::move(dsd), std::move(params), std::move(roots));
}

DistributionShiftDiagram random_dsd(const RandomDsdOptions& opts, std::mt19937_64& rng) {
    if (opts.n_causes < 0 || opts.n_effects < 0 || opts.n_causes + opts.n_effects < 1 || opts.n_proxies < 0)
        throw InputError("random DSD needs at least one hidden vertex");
    Builder b;
    const auto y = b.add("Y", VertexRole::Label);
    std::vector<VertexId> us;
    const int k = opts.n_causes + opts.n_effects;
    for (int i = 0; i < k; ++i) us.push_back(b.add("U" + std::to_string(i + 1), VertexRole::Hidden));
    for (int i = 0; i < k; ++i) {
        const auto m = b.add("M" + std::to_string(i + 1), VertexRole::Mechanism);
        const bool cause = i < opts.n_causes;
        if (cause)
            b.edge(us[i], y);
        else
            b.edge(y, us[i]);
        if (!cause && unit(rng) < opts.reversed_mechanism_prob)
            b.edge(us[i], m);
        else
            b.edge(m, us[i]);
    }
    for (int j = 0; j < opts.n_proxies; ++j) {
        const auto v = b.add("V" + std::to_string(j + 1), VertexRole::Proxy);
        bool any = false;
        for (VertexId u : us)
            if (unit(rng) < opts.edge_density) {
                b.edge(u, v);
                any = true;
            }
        if (!any) b.edge(us[static_cast<std::size_t>(uniform_int(rng, 0, k - 1))], v);
    }
    return b.build();
}

DropoutScm random_scm(const DistributionShiftDiagram& dsd, const RandomScmOptions& opts, std::mt19937_64& rng) {
    const auto& g = dsd.dag();
    std::map<VertexId, std::vector<double>> roots;
    for (std::size_t v = 0; v < g.size(); ++v)
        if (g.parents(static_cast<VertexId>(v)).empty())
            roots[static_cast<VertexId>(v)] = random_dist(rng, uniform_int(rng, 2, opts.max_symbols));

    std::map<VertexId, Combiner> combiners;
    bool have_partition = validate_dsd(dsd).empty();
    if (have_partition) {
        const auto hp = classify_hidden(dsd);
        for (VertexId u : hp.bad)
            if (g.parents(u).size() >= 2 && unit(rng) < opts.lossy_bad_prob)
                combiners[u] = Combiner::sum_mod(uniform_int(rng, 2, opts.max_symbols));
    }
    // Symbol counts are only known after construction, so build once with
    // identity transforms, then redraw permutations against the real sizes.
    std::vector<EdgeParams> params;
    for (const auto& e : g.edges()) {
        EdgeParams p;
        const bool mech = dsd.role(e.parent) == VertexRole::Mechanism || dsd.role(e.child) == VertexRole::Mechanism;
        const double one = mech ? opts.mechanism_one_prob : opts.alpha_one_prob;
        p.alpha = unit(rng) < one ? 1.0 : 0.05 + 0.9 * unit(rng);
        params.push_back(std::move(p));
    }
    DropoutScm shape(dsd, params, roots, combiners);
    for (std::size_t i = 0; i < params.size(); ++i)
        params[i].perm = random_perm(rng, shape.symbols(g.edges()[i].parent));
    return DropoutScm(dsd, std::move(params), std::move(roots), std::move(combiners));
}

DropoutScm random_small_scm(std::mt19937_64& rng, const RandomScmOptions& opts) {
    RandomDsdOptions d;
    const int k = uniform_int(rng, 1, 2);
    d.n_causes = 0;
    for (int i = 0; i < k; ++i) d.n_causes += unit(rng) < 0.5 ? 1 : 0;
    d.n_effects = k - d.n_causes;
    d.n_proxies = 6 - (1 + 2 * k);
    d.edge_density = 0.6;
    const auto dsd = random_dsd(d, rng);
    return random_scm(dsd, opts, rng);
}

} // namespace per
