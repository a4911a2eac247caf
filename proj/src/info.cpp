#include "per/info.hpp"

#include "per/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace per {

namespace {

void check_disjoint(std::initializer_list<std::span<const VertexId>> sets) {
    std::vector<VertexId> all;
    for (auto s : sets) all.insert(all.end(), s.begin(), s.end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw InputError("information query sets must be pairwise disjoint");
}

double entropy_of(const std::vector<double>& probs) {
    double h = 0;
    for (double p : probs)
        if (p > 0) h -= p * std::log2(p);
    return h;
}

VertexSet join(std::initializer_list<std::span<const VertexId>> sets) {
    VertexSet out;
    for (auto s : sets) out.insert(out.end(), s.begin(), s.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Memoised joint entropies of variable subsets of one table.
class Entropies {
public:
    explicit Entropies(const JointTable& t) : t_(t) {}

    double h(std::initializer_list<std::span<const VertexId>> sets) {
        const auto key = join(sets);
        if (key.empty()) return 0.0;
        for (VertexId v : key) t_.position(v);
        const auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const double value = entropy_of(t_.marginal(key).probabilities());
        cache_.emplace(key, value);
        return value;
    }

    double cmi(std::span<const VertexId> a, std::span<const VertexId> b, std::span<const VertexId> z) {
        check_disjoint({a, b, z});
        return h({a, z}) + h({b, z}) - h({a, b, z}) - h({z});
    }

    double ch(std::span<const VertexId> a, std::span<const VertexId> z) { return h({a, z}) - h({z}); }

private:
    const JointTable& t_;
    std::map<VertexSet, double> cache_;
};

std::string describe(const Dag& dag, std::initializer_list<std::pair<const char*, std::span<const VertexId>>> parts) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [label, set] : parts) {
        os << (first ? "" : "; ") << label << "={";
        first = false;
        for (std::size_t i = 0; i < set.size(); ++i) os << (i ? "," : "") << dag.name(set[i]);
        os << "}";
    }
    return os.str();
}

BoundReport make_report(std::string name, std::string vars, double lhs, double rhs, double tol) {
    BoundReport r;
    r.name = std::move(name);
    r.vars = std::move(vars);
    r.lhs = lhs;
    r.rhs = rhs;
    r.slack = rhs - lhs;
    r.satisfied = r.slack >= -tol;
    return r;
}

BoundReport skipped(std::string name, std::string vars, std::string reason) {
    BoundReport r;
    r.name = std::move(name);
    r.vars = std::move(vars);
    r.skipped = true;
    r.reason = std::move(reason);
    return r;
}

} // namespace

double entropy(const JointTable& t, std::span<const VertexId> a) {
    check_disjoint({a});
    return entropy_of(t.marginal(a).probabilities());
}

double conditional_entropy(const JointTable& t, std::span<const VertexId> a, std::span<const VertexId> given) {
    check_disjoint({a, given});
    Entropies e(t);
    return e.ch(a, given);
}

double mutual_info(const JointTable& t, std::span<const VertexId> a, std::span<const VertexId> b) {
    return conditional_mi(t, a, b, {});
}

double conditional_mi(const JointTable& t, std::span<const VertexId> a, std::span<const VertexId> b,
                      std::span<const VertexId> z) {
    Entropies e(t);
    return e.cmi(a, b, z);
}

double interaction_info(const JointTable& t, std::span<const VertexId> a, std::span<const VertexId> b,
                        std::span<const VertexId> c) {
    check_disjoint({a, b, c});
    Entropies e(t);
    return e.cmi(a, b, {}) - e.cmi(a, b, c);
}

double context_sensitivity(const DropoutScm& scm, VertexId m, std::span<const VertexId> x,
                           const EnumerateOptions& opts) {
    const auto& dsd = scm.dsd();
    if (!scm.dag().contains(m) || dsd.role(m) != VertexRole::Mechanism)
        throw InputError("context sensitivity needs a mechanism vertex");
    for (VertexId v : x)
        if (!scm.dag().contains(v) || dsd.role(v) != VertexRole::Proxy)
            throw InputError("context sensitivity inputs must be proxies");
    const VertexId y = dsd.label();
    VertexSet vars{y, m};
    vars.insert(vars.end(), x.begin(), x.end());
    const auto t = enumerate_joint(scm, vars, opts);
    const VertexId ys[] = {y}, ms[] = {m};
    return conditional_mi(t, ys, ms, x);
}

double redundancy(const DropoutScm& scm, VertexId u, std::span<const VertexId> x, const EnumerateOptions& opts) {
    if (x.empty()) return 0.0;
    VertexSet vars{u};
    vars.insert(vars.end(), x.begin(), x.end());
    const auto t = enumerate_joint(scm, vars, opts);
    const VertexId us[] = {u};
    return mutual_info(t, us, x);
}

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw InputError("closed form does not apply: " + what);
}

double marginal_entropy(const DropoutScm& scm, VertexId v, const EnumerateOptions& opts) {
    const VertexId vs[] = {v};
    return entropy(enumerate_joint(scm, vs, opts), vs);
}

// Every hidden parent of x other than u is marginally d-separated from u.
void require_other_parents_separated(const DropoutScm& scm, VertexId u, std::span<const VertexId> x) {
    const auto& dsd = scm.dsd();
    for (VertexId v : x) {
        require(dsd.role(v) == VertexRole::Proxy, scm.dag().name(v) + " is not a proxy");
        for (VertexId p : dsd.hidden_parents(v)) {
            if (p == u) continue;
            const VertexId a[] = {u}, b[] = {p};
            require(d_separated(scm.dag(), a, b, {}),
                    "hidden parent " + scm.dag().name(p) + " of " + scm.dag().name(v) + " is d-connected to " +
                        scm.dag().name(u));
        }
    }
}

void require_valid(const DropoutScm& scm) {
    const auto v = validate_dsd(scm.dsd());
    require(v.empty(), v.empty() ? "" : v.front().message);
}

} // namespace

double closed_form_redundancy(const DropoutScm& scm, VertexId u, std::span<const VertexId> x,
                              const EnumerateOptions& opts) {
    require_valid(scm);
    const auto& g = scm.dag();
    require(scm.dsd().role(u) == VertexRole::Hidden, g.name(u) + " is not hidden");
    require_other_parents_separated(scm, u, x);
    for (VertexId v : x)
        if (g.has_edge(u, v)) require(scm.invertible(v), g.name(v) + " has a lossy combiner");
    const VertexId us[] = {u};
    const auto t = enumerate_joint(scm, us, opts);
    if (!scm.is_root(u)) {
        const int null_code[] = {kNull};
        require(t.at(null_code) == 0.0, g.name(u) + " can be Null");
    }
    return alpha_to_children(scm, u, x) * entropy(t, us);
}

double closed_form_sensitivity_good(const DropoutScm& scm, VertexId u, std::span<const VertexId> x,
                                    const EnumerateOptions& opts) {
    require_valid(scm);
    const auto& dsd = scm.dsd();
    const auto& g = scm.dag();
    const auto hp = classify_hidden(dsd);
    require(set_contains(hp.good, u), g.name(u) + " is not a good hidden vertex");
    const VertexId m = *dsd.mechanism_of(u);
    const VertexId y = dsd.label();
    require(g.has_edge(m, u) && g.has_edge(u, y), "expected orientation M -> U -> Y");
    require(scm.invertible(y), "label has a lossy combiner");
    require_other_parents_separated(scm, u, x);
    for (VertexId v : x) require(scm.invertible(v), g.name(v) + " has a lossy combiner");
    return scm.alpha(m, u) * (1.0 - alpha_to_children(scm, u, x)) * scm.alpha(u, y) *
           marginal_entropy(scm, m, opts);
}

double closed_form_sensitivity_bad(const DropoutScm& scm, VertexId u, std::span<const VertexId> x,
                                   const EnumerateOptions& opts) {
    require_valid(scm);
    const auto& dsd = scm.dsd();
    const auto& g = scm.dag();
    const auto hp = classify_hidden(dsd);
    require(set_contains(hp.bad, u), g.name(u) + " is not a bad hidden vertex");
    for (VertexId v : x)
        require(dsd.role(v) == VertexRole::Proxy && g.parents(v).size() == 1 && g.parents(v)[0] == u,
                g.name(v) + " is not a single-parent child of " + g.name(u));
    const auto& c = scm.combiner(u);
    if (c.kind != Combiner::Kind::Invertible)
        for (std::size_t t = 1; t < c.table.size(); ++t)
            require(c.table[t] != kNull, g.name(u) + " maps a non-Null tuple to Null");
    const VertexId m = *dsd.mechanism_of(u);
    const VertexId y = dsd.label();
    const VertexId vars[] = {m, y, u};
    const auto t = enumerate_joint(scm, vars, opts);
    const VertexId ms[] = {m}, ys[] = {y}, us[] = {u};
    return alpha_to_children(scm, u, x) * conditional_mi(t, ms, ys, us);
}

std::vector<int> discretize(std::span<const double> values, ColumnKind kind, int bins) {
    std::vector<int> out(values.size(), -1);
    if (kind == ColumnKind::Discrete) {
        std::map<double, int> rank;
        for (double v : values)
            if (!std::isnan(v)) rank.emplace(v, 0);
        int k = 0;
        for (auto& [v, r] : rank) r = k++;
        for (std::size_t i = 0; i < values.size(); ++i)
            if (!std::isnan(values[i])) out[i] = rank[values[i]];
        return out;
    }
    if (bins < 1) throw InputError("bin count must be positive");
    std::vector<double> sorted;
    for (double v : values)
        if (!std::isnan(v)) sorted.push_back(v);
    if (sorted.empty()) return out;
    std::sort(sorted.begin(), sorted.end());
    // Cut points at the equal-frequency quantiles; ties share a bin.
    std::vector<double> cuts;
    for (int b = 1; b < bins; ++b) {
        const auto pos = static_cast<std::size_t>(static_cast<double>(b) * static_cast<double>(sorted.size()) / bins);
        cuts.push_back(sorted[std::min(pos, sorted.size() - 1)]);
    }
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isnan(values[i]))
            out[i] = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), values[i]) - cuts.begin());
    return out;
}

MiEstimate estimate_mi(const Dataset& ds, std::span<const std::string> a, std::span<const std::string> b,
                       std::span<const std::string> z, const Binning& binning) {
    if (a.empty() || b.empty()) throw InputError("estimate_mi needs non-empty argument sets");
    {
        std::vector<std::string> all(a.begin(), a.end());
        all.insert(all.end(), b.begin(), b.end());
        all.insert(all.end(), z.begin(), z.end());
        std::sort(all.begin(), all.end());
        if (std::adjacent_find(all.begin(), all.end()) != all.end())
            throw InputError("estimate_mi argument sets must be disjoint");
    }
    const std::size_t n = ds.rows();
    // Joint code per row for each argument set via a dictionary of tuples.
    auto encode = [&](std::span<const std::string> cols, std::vector<char>& ok, std::size_t& declared) {
        std::vector<std::vector<int>> codes;
        declared = 1;
        for (const auto& c : cols) {
            const auto& info = ds.info(c);
            codes.push_back(discretize(ds.column(c), info.kind, binning.bins));
            if (info.kind == ColumnKind::Discrete && info.cardinality > 0 && declared > 0)
                declared *= static_cast<std::size_t>(info.cardinality);
            else
                declared = 0;
        }
        std::map<std::vector<int>, int> dict;
        std::vector<int> out(n, -1);
        std::vector<int> key(cols.size());
        for (std::size_t r = 0; r < n; ++r) {
            bool row_ok = true;
            for (std::size_t k = 0; k < cols.size(); ++k) {
                key[k] = codes[k][r];
                row_ok &= key[k] >= 0;
            }
            if (!row_ok) {
                ok[r] = 0;
                continue;
            }
            out[r] = dict.emplace(key, static_cast<int>(dict.size())).first->second;
        }
        return out;
    };
    std::vector<char> ok(n, 1);
    std::size_t declared_a = 0, declared_b = 0, declared_z = 0;
    const auto ca = encode(a, ok, declared_a);
    const auto cb = encode(b, ok, declared_b);
    const auto cz = encode(z, ok, declared_z);

    MiEstimate est;
    std::map<int, std::vector<std::size_t>> strata;
    for (std::size_t r = 0; r < n; ++r)
        if (ok[r]) strata[z.empty() ? 0 : cz[r]].push_back(r);
    for (const auto& [_, rows] : strata) est.rows_used += rows.size();
    if (est.rows_used == 0) {
        est.bits = std::numeric_limits<double>::quiet_NaN();
        est.reason = "no rows with complete values";
        return est;
    }
    est.strata = strata.size();
    if (!z.empty() && declared_z > strata.size()) est.empty_strata = declared_z - strata.size();

    double total = 0;
    for (const auto& [_, rows] : strata) {
        std::map<int, double> pa, pb;
        std::map<std::pair<int, int>, double> pab;
        for (std::size_t r : rows) {
            pa[ca[r]] += 1;
            pb[cb[r]] += 1;
            pab[{ca[r], cb[r]}] += 1;
        }
        const double m = static_cast<double>(rows.size());
        double mi = 0;
        for (const auto& [k, c] : pab) mi += c / m * std::log2(c * m / (pa[k.first] * pb[k.second]));
        total += m / static_cast<double>(est.rows_used) * mi;
    }
    est.bits = std::max(0.0, total);
    est.valid = true;
    return est;
}

namespace {

BoundReport dpi_impl(const Dag& dag, Entropies& e, std::span<const VertexId> a, std::span<const VertexId> b,
                     std::span<const VertexId> c, std::span<const VertexId> d, double tol) {
    const auto vars = describe(dag, {{"A", a}, {"B", b}, {"C", c}, {"D", d}});
    const auto bd = join({b, d});
    if (!d_separated(dag, a, c, bd)) return skipped("dpi", vars, "A and C are not d-separated by B u D");
    const double lhs = e.cmi(a, c, d);
    const double rhs = std::min(e.cmi(a, b, d), e.cmi(b, c, d));
    auto r = make_report("dpi", vars, lhs, rhs, tol);
    const double hb = e.ch(b, d);
    if (rhs - hb > tol) {
        r.satisfied = false;
        r.reason = "min(I(A:B|D), I(B:C|D)) exceeds H(B|D)";
    }
    return r;
}

BoundReport positive_ii_impl(const Dag& dag, Entropies& e, std::span<const VertexId> a, std::span<const VertexId> b,
                             std::span<const VertexId> c, double tol) {
    const auto vars = describe(dag, {{"A", a}, {"B", b}, {"C", c}});
    if (!d_separated(dag, a, c, b)) return skipped("positive_ii", vars, "A and C are not d-separated by B");
    const double ii = e.cmi(a, c, {}) - e.cmi(a, c, b);
    return make_report("positive_ii", vars, 0.0, ii, tol);
}

BoundReport applied_dpi_impl(const DistributionShiftDiagram& dsd, Entropies& e, VertexId u,
                             std::span<const VertexId> x, std::span<const VertexId> m_prime, double tol) {
    const auto& dag = dsd.dag();
    const VertexId m = *dsd.mechanism_of(u);
    const VertexId y = dsd.label();
    const VertexId ms[] = {m}, ys[] = {y}, us[] = {u};
    const auto vars = describe(dag, {{"U", us}, {"X", x}, {"M'", m_prime}});
    const auto z = join({us, x, m_prime});
    if (std::binary_search(z.begin(), z.end(), m))
        return skipped("applied_dpi", vars, "M' contains the mechanism of U");
    if (!d_separated(dag, ms, ys, z)) return skipped("applied_dpi", vars, "M and Y are not d-separated by U, X, M'");
    const auto xm = join({x, m_prime});
    return make_report("applied_dpi", vars, e.cmi(ms, ys, xm), e.ch(us, x), tol);
}

std::vector<BoundReport> collider_dpi_impl(const DistributionShiftDiagram& dsd, Entropies& e, VertexId u,
                                           std::span<const VertexId> x, std::span<const VertexId> m_prime,
                                           double tol) {
    const auto& dag = dsd.dag();
    const VertexId m = *dsd.mechanism_of(u);
    const VertexId y = dsd.label();
    const VertexId ms[] = {m}, ys[] = {y}, us[] = {u};
    const auto vars = describe(dag, {{"U", us}, {"X", x}, {"M'", m_prime}});
    VertexSet xp;
    for (VertexId v : x)
        if (dag.has_edge(u, v)) xp.push_back(v);
    std::sort(xp.begin(), xp.end());
    const auto xs = make_set(VertexSet(x.begin(), x.end()));
    const auto rest = join({set_difference(xs, xp), m_prime});
    const auto uy = join({us, ys});
    if (std::binary_search(rest.begin(), rest.end(), m))
        return {skipped("collider_dpi", vars, "M' contains the mechanism of U")};
    const bool bad = d_separated(dag, ms, ys, {}) && !d_separated(dag, ms, ys, us);
    if (!bad) return {skipped("collider_dpi", vars, "U is not a bad hidden vertex")};
    if (!d_separated(dag, ms, ys, rest))
        return {skipped("collider_dpi", vars, "M and Y are not d-separated by (X \\ X') u M'")};
    std::vector<BoundReport> out;
    const double lhs = e.cmi(ms, ys, join({x, m_prime}));
    if (xp.empty()) {
        out.push_back(make_report("collider_dpi", vars, lhs, 0.0, tol));
        out.push_back(make_report("collider_dpi_drop_y", vars, 0.0, 0.0, tol));
        return out;
    }
    if (!rest.empty() && !d_separated(dag, xp, rest, uy))
        out.push_back(skipped("collider_dpi", vars, "X' and the remaining inputs are not d-separated by U, Y"));
    else
        out.push_back(make_report("collider_dpi", vars, lhs, e.cmi(us, xp, ys), tol));
    if (!d_separated(dag, xp, ys, us))
        out.push_back(skipped("collider_dpi_drop_y", vars, "X' and Y are not d-separated by U"));
    else
        out.push_back(make_report("collider_dpi_drop_y", vars, e.cmi(us, xp, ys), e.cmi(us, xp, {}), tol));
    return out;
}

BoundReport common_cause_impl(const Dag& dag, Entropies& e, VertexId vi, VertexId vj, VertexId u, double tol) {
    const VertexId is[] = {vi}, js[] = {vj}, us[] = {u};
    const auto vars = describe(dag, {{"Vi", is}, {"Vj", js}, {"U", us}});
    if (d_separated(dag, is, js, {})) return skipped("common_cause", vars, "Vi and Vj are d-separated");
    if (!d_separated(dag, is, js, us)) return skipped("common_cause", vars, "U does not separate Vi and Vj");
    const auto ij = join({is, js});
    return make_report("common_cause", vars, e.cmi(is, js, {}), e.cmi(ij, us, {}), tol);
}

} // namespace

BoundReport check_dpi(const Dag& dag, const JointTable& t, std::span<const VertexId> a, std::span<const VertexId> b,
                      std::span<const VertexId> c, std::span<const VertexId> d, double tol) {
    check_disjoint({a, b, c, d});
    Entropies e(t);
    return dpi_impl(dag, e, a, b, c, d, tol);
}

BoundReport check_positive_ii(const Dag& dag, const JointTable& t, std::span<const VertexId> a,
                              std::span<const VertexId> b, std::span<const VertexId> c, double tol) {
    check_disjoint({a, b, c});
    Entropies e(t);
    return positive_ii_impl(dag, e, a, b, c, tol);
}

BoundReport check_applied_dpi(const DistributionShiftDiagram& dsd, const JointTable& t, VertexId u,
                              std::span<const VertexId> x, std::span<const VertexId> m_prime, double tol) {
    if (!dsd.mechanism_of(u)) throw InputError("hidden vertex has no mechanism");
    Entropies e(t);
    return applied_dpi_impl(dsd, e, u, x, m_prime, tol);
}

std::vector<BoundReport> check_collider_dpi(const DistributionShiftDiagram& dsd, const JointTable& t, VertexId u,
                                            std::span<const VertexId> x, std::span<const VertexId> m_prime,
                                            double tol) {
    if (!dsd.mechanism_of(u)) throw InputError("hidden vertex has no mechanism");
    Entropies e(t);
    return collider_dpi_impl(dsd, e, u, x, m_prime, tol);
}

BoundReport check_common_cause(const Dag& dag, const JointTable& t, VertexId vi, VertexId vj, VertexId u,
                               double tol) {
    if (vi == vj || vi == u || vj == u) throw InputError("common-cause bound needs three distinct vertices");
    Entropies e(t);
    return common_cause_impl(dag, e, vi, vj, u, tol);
}

std::vector<BoundReport> check_bounds(const DropoutScm& scm, const BoundOptions& opts) {
    const auto& dag = scm.dag();
    const auto n = static_cast<VertexId>(dag.size());
    VertexSet all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    const auto table = enumerate_joint(scm, all, opts.enumerate);
    Entropies e(table);
    std::mt19937_64 rng(opts.seed);
    std::vector<BoundReport> out;
    auto keep = [&](BoundReport r) {
        if (!r.skipped) out.push_back(std::move(r));
    };

    for (VertexId a = 0; a < n; ++a)
        for (VertexId c = a + 1; c < n; ++c)
            for (VertexId b = 0; b < n; ++b) {
                if (b == a || b == c) continue;
                const VertexId as[] = {a}, bs[] = {b}, cs[] = {c};
                keep(dpi_impl(dag, e, as, bs, cs, {}, opts.tolerance));
                keep(positive_ii_impl(dag, e, as, bs, cs, opts.tolerance));
                keep(common_cause_impl(dag, e, a, c, b, opts.tolerance));
                // One random conditioning vertex per triple for the D form.
                const auto d = static_cast<VertexId>(rng() % static_cast<std::uint64_t>(n));
                if (d != a && d != b && d != c) {
                    const VertexId ds[] = {d};
                    keep(dpi_impl(dag, e, as, bs, cs, ds, opts.tolerance));
                }
            }

    if (!validate_dsd(scm.dsd()).empty()) return out;
    const auto& dsd = scm.dsd();
    const auto proxies = dsd.proxies();
    const auto mechanisms = dsd.mechanisms();
    auto draw = [&](const VertexSet& pool, VertexId exclude) {
        VertexSet s;
        for (VertexId v : pool)
            if (v != exclude && (rng() & 1U)) s.push_back(v);
        return s;
    };
    const auto hp = classify_hidden(dsd);
    for (VertexId u : dsd.hidden()) {
        const VertexId m = *dsd.mechanism_of(u);
        for (int k = 0; k < opts.subsets; ++k) {
            const auto x = draw(proxies, -1);
            const auto mp = draw(mechanisms, m);
            if (set_contains(hp.good, u)) {
                out.push_back(applied_dpi_impl(dsd, e, u, x, mp, opts.tolerance));
            } else {
                for (auto& r : collider_dpi_impl(dsd, e, u, x, mp, opts.tolerance)) out.push_back(std::move(r));
            }
        }
    }
    return out;
}

} // namespace per
