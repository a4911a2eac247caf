#include "per/dropout_scm.hpp"

#include "per/error.hpp"
#include "per/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace per {

DropoutScm::DropoutScm(DistributionShiftDiagram dsd, std::vector<EdgeParams> edges,
                       std::map<VertexId, std::vector<double>> root_dist, std::map<VertexId, Combiner> combiners)
    : dsd_(std::move(dsd)), edges_(std::move(edges)), root_dist_(std::move(root_dist)) {
    const Dag& g = dag();
    const auto n = g.size();
    if (edges_.size() != g.edges().size())
        throw InputError("scm: expected " + std::to_string(g.edges().size()) + " edge parameter entries, got " +
                         std::to_string(edges_.size()));
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const double a = edges_[i].alpha;
        if (!(a >= 0.0 && a <= 1.0))
            throw InputError("scm: alpha of edge " + g.name(g.edges()[i].parent) + " -> " +
                             g.name(g.edges()[i].child) + " must be in [0, 1]");
    }
    for (const auto& [v, dist] : root_dist_) {
        if (!g.contains(v)) throw InputError("scm: distribution for unknown vertex");
        if (!is_root(v)) throw InputError("scm: distribution given for non-root '" + g.name(v) + "'");
        if (dist.empty()) throw InputError("scm: empty alphabet for '" + g.name(v) + "'");
        double total = 0;
        for (double p : dist) {
            if (!(p >= 0.0)) throw InputError("scm: negative probability in '" + g.name(v) + "'");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9) throw InputError("scm: distribution of '" + g.name(v) + "' does not sum to 1");
    }
    for (const auto& [v, c] : combiners) {
        if (!g.contains(v)) throw InputError("scm: combiner for unknown vertex");
        if (is_root(v) && c.kind != Combiner::Kind::Invertible)
            throw InputError("scm: combiner given for root '" + g.name(v) + "'");
    }

    parent_edge_.assign(n, {});
    for (std::size_t v = 0; v < n; ++v)
        for (VertexId p : g.parents(static_cast<VertexId>(v)))
            parent_edge_[v].push_back(static_cast<int>(*g.edge_index(p, static_cast<VertexId>(v))));

    symbols_.assign(n, 0);
    combiners_.assign(n, Combiner::invertible());
    for (VertexId v : g.topological_order()) {
        const auto& nm = g.name(v);
        if (is_root(v)) {
            const auto it = root_dist_.find(v);
            if (it == root_dist_.end()) throw InputError("scm: root '" + nm + "' has no distribution");
            symbols_[v] = static_cast<int>(it->second.size());
            continue;
        }
        std::size_t tuples = 1;
        for (VertexId p : g.parents(v)) tuples *= static_cast<std::size_t>(symbols_[p] + 1);
        Combiner c = combiners.count(v) ? combiners.at(v) : Combiner::invertible();
        switch (c.kind) {
        case Combiner::Kind::Invertible:
            symbols_[v] = static_cast<int>(tuples - 1);
            break;
        case Combiner::Kind::SumMod: {
            if (c.modulus < 1) throw InputError("scm: sum_mod modulus of '" + nm + "' must be >= 1");
            std::vector<int> table(tuples, 0);
            const auto ps = g.parents(v);
            for (std::size_t t = 0; t < tuples; ++t) {
                std::size_t rest = t;
                long sum = 0;
                bool any = false;
                for (std::size_t i = ps.size(); i-- > 0;) {
                    const auto base = static_cast<std::size_t>(symbols_[ps[i]] + 1);
                    const auto comp = static_cast<long>(rest % base);
                    rest /= base;
                    if (comp > 0) {
                        any = true;
                        sum += comp - 1;
                    }
                }
                table[t] = any ? 1 + static_cast<int>(sum % c.modulus) : 0;
            }
            const int out = c.modulus + 1;
            c = Combiner::lossy(std::move(table), out);
            symbols_[v] = out - 1;
            break;
        }
        case Combiner::Kind::Lossy:
            if (c.table.size() != tuples)
                throw InputError("scm: lossy table of '" + nm + "' needs " + std::to_string(tuples) + " entries");
            if (c.out_size < 2) throw InputError("scm: lossy output alphabet of '" + nm + "' is too small");
            if (c.table[0] != 0) throw InputError("scm: lossy table of '" + nm + "' must map all-Null to Null");
            for (int o : c.table)
                if (o < 0 || o >= c.out_size) throw InputError("scm: lossy table of '" + nm + "' out of range");
            symbols_[v] = c.out_size - 1;
            break;
        }
        combiners_[v] = std::move(c);
    }

    for (std::size_t i = 0; i < edges_.size(); ++i) {
        auto& perm = edges_[i].perm;
        const int k = symbols_[g.edges()[i].parent];
        if (perm.empty()) {
            perm.resize(static_cast<std::size_t>(k));
            std::iota(perm.begin(), perm.end(), 0);
        }
        auto sorted = perm;
        std::sort(sorted.begin(), sorted.end());
        std::vector<int> ident(static_cast<std::size_t>(k));
        std::iota(ident.begin(), ident.end(), 0);
        if (sorted != ident)
            throw InputError("scm: transform on edge " + g.name(g.edges()[i].parent) + " -> " +
                             g.name(g.edges()[i].child) + " is not a permutation of " + std::to_string(k) +
                             " symbols");
    }
}

double DropoutScm::alpha(VertexId parent, VertexId child) const {
    const auto idx = dag().edge_index(parent, child);
    if (!idx) throw InputError("no edge " + std::to_string(parent) + " -> " + std::to_string(child));
    return edges_[*idx].alpha;
}

const std::vector<double>& DropoutScm::root_dist(VertexId v) const {
    const auto it = root_dist_.find(v);
    if (it == root_dist_.end()) throw InputError("'" + dag().name(v) + "' is not a root");
    return it->second;
}

int DropoutScm::contribution(std::size_t index, int parent_code) const {
    const VertexId p = dag().edges()[index].parent;
    if (is_root(p)) return 1 + edges_[index].perm[static_cast<std::size_t>(parent_code)];
    if (parent_code == kNull) return 0;
    return 1 + edges_[index].perm[static_cast<std::size_t>(parent_code - 1)];
}

int DropoutScm::combine(VertexId v, std::span<const int> contributions) const {
    const auto ps = dag().parents(v);
    int tuple = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) tuple = tuple * (symbols_[ps[i]] + 1) + contributions[i];
    const auto& c = combiners_[v];
    if (c.kind == Combiner::Kind::Invertible) return tuple;
    return c.table[static_cast<std::size_t>(tuple)];
}

namespace {

// Shared enumeration plan: which edges are random, root strides, and the
// output indexing.
struct Plan {
    std::vector<VertexId> roots;
    std::vector<int> root_card;
    std::vector<int> edge_bit; // -1: deterministic
    std::vector<std::size_t> random_edges;
    std::size_t root_assignments = 1;
    std::size_t masks = 1;
    std::vector<std::size_t> out_stride;
    std::vector<int> out_cards;
    std::size_t out_size = 1;
};

Plan make_plan(const DropoutScm& scm, std::span<const VertexId> vars, const EnumerateOptions& opts) {
    const Dag& g = scm.dag();
    Plan plan;
    double work = 1;
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (!scm.is_root(static_cast<VertexId>(v))) continue;
        plan.roots.push_back(static_cast<VertexId>(v));
        plan.root_card.push_back(scm.cardinality(static_cast<VertexId>(v)));
        work *= plan.root_card.back();
        plan.root_assignments *= static_cast<std::size_t>(plan.root_card.back());
    }
    plan.edge_bit.assign(g.edges().size(), -1);
    for (std::size_t i = 0; i < g.edges().size(); ++i) {
        const double a = scm.edge(i).alpha;
        if (a > 0.0 && a < 1.0) {
            plan.edge_bit[i] = static_cast<int>(plan.random_edges.size());
            plan.random_edges.push_back(i);
            work *= 2;
        }
    }
    if (work > opts.cap)
        throw CapExceeded("enumeration work " + std::to_string(plan.root_assignments) + " root assignments x 2^" +
                          std::to_string(plan.random_edges.size()) + " dropout patterns exceeds cap " +
                          std::to_string(opts.cap));
    plan.masks = std::size_t{1} << plan.random_edges.size();

    std::vector<VertexId> seen(vars.begin(), vars.end());
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) throw InputError("duplicate variable in query");
    double out = 1;
    for (VertexId v : vars) {
        if (!g.contains(v)) throw InputError("unknown vertex id " + std::to_string(v));
        plan.out_cards.push_back(scm.cardinality(v));
        out *= plan.out_cards.back();
    }
    if (out > opts.cap)
        throw CapExceeded("joint table size " + std::to_string(static_cast<long long>(out)) + " exceeds cap " +
                          std::to_string(opts.cap));
    plan.out_stride.assign(vars.size(), 1);
    for (std::size_t k = vars.size(); k-- > 0;) {
        plan.out_stride[k] = plan.out_size;
        plan.out_size *= static_cast<std::size_t>(plan.out_cards[k]);
    }
    return plan;
}

// Evaluates one (root assignment, dropout mask) item. Returns its weight and
// fills `codes` for every vertex.
double evaluate_item(const DropoutScm& scm, const Plan& plan, std::size_t root_idx, std::size_t mask,
                     std::vector<int>& codes, std::vector<int>& contrib) {
    const Dag& g = scm.dag();
    double w = 1.0;
    for (std::size_t r = plan.roots.size(); r-- > 0;) {
        const auto card = static_cast<std::size_t>(plan.root_card[r]);
        const auto c = static_cast<int>(root_idx % card);
        root_idx /= card;
        codes[plan.roots[r]] = c;
        w *= scm.root_dist(plan.roots[r])[static_cast<std::size_t>(c)];
    }
    if (w == 0.0) return 0.0;
    for (std::size_t b = 0; b < plan.random_edges.size(); ++b) {
        const double a = scm.edge(plan.random_edges[b]).alpha;
        w *= (mask >> b) & 1U ? a : 1.0 - a;
    }
    for (VertexId v : g.topological_order()) {
        const auto ps = g.parents(v);
        if (ps.empty()) continue;
        contrib.resize(ps.size());
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const auto e = static_cast<std::size_t>(scm.parent_edges(v)[i]);
            const int bit = plan.edge_bit[e];
            const bool transmit = bit < 0 ? scm.edge(e).alpha >= 1.0 : ((mask >> bit) & 1U) != 0;
            contrib[i] = transmit ? scm.contribution(e, codes[ps[i]]) : 0;
        }
        codes[v] = scm.combine(v, contrib);
    }
    return w;
}

std::size_t out_index(const Plan& plan, std::span<const VertexId> vars, const std::vector<int>& codes) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < vars.size(); ++k) idx += plan.out_stride[k] * static_cast<std::size_t>(codes[vars[k]]);
    return idx;
}

} // namespace

JointTable enumerate_joint_serial(const DropoutScm& scm, std::span<const VertexId> vars, const EnumerateOptions& opts) {
    const Plan plan = make_plan(scm, vars, opts);
    std::vector<double> table(plan.out_size, 0.0);
    std::vector<int> codes(scm.size(), 0), contrib;
    for (std::size_t r = 0; r < plan.root_assignments; ++r)
        for (std::size_t m = 0; m < plan.masks; ++m) {
            const double w = evaluate_item(scm, plan, r, m, codes, contrib);
            if (w != 0.0) table[out_index(plan, vars, codes)] += w;
        }
    return JointTable(std::vector<VertexId>(vars.begin(), vars.end()), plan.out_cards, std::move(table));
}

JointTable enumerate_joint(const DropoutScm& scm, std::span<const VertexId> vars, const EnumerateOptions& opts) {
    const Plan plan = make_plan(scm, vars, opts);
    const std::size_t work = plan.root_assignments * plan.masks;
    // Chunking depends only on the problem so the reduction order, and hence
    // the floating-point result, is independent of the thread count.
    const std::size_t chunks =
        std::clamp<std::size_t>(work / std::max<std::size_t>(plan.out_size * 64, 1 << 16), 1, 32);
    std::vector<std::vector<double>> partial(chunks);

#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
    for (std::size_t c = 0; c < chunks; ++c) {
        auto& table = partial[c];
        table.assign(plan.out_size, 0.0);
        std::vector<int> codes(scm.size(), 0), contrib;
        const std::size_t lo = work * c / chunks, hi = work * (c + 1) / chunks;
        for (std::size_t w = lo; w < hi; ++w) {
            const double p = evaluate_item(scm, plan, w / plan.masks, w % plan.masks, codes, contrib);
            if (p != 0.0) table[out_index(plan, vars, codes)] += p;
        }
    }
    std::vector<double> table = std::move(partial[0]);
    for (std::size_t c = 1; c < chunks; ++c)
        for (std::size_t i = 0; i < table.size(); ++i) table[i] += partial[c][i];
    return JointTable(std::vector<VertexId>(vars.begin(), vars.end()), plan.out_cards, std::move(table));
}

namespace {

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void sample_block(const DropoutScm& scm, std::size_t lo, std::size_t hi, std::uint64_t seed, std::size_t block,
                  std::vector<std::vector<double>>& cols) {
    const Dag& g = scm.dag();
    std::mt19937_64 rng(derive_seed(seed, block));
    std::vector<int> codes(scm.size(), 0), contrib;
    for (std::size_t r = lo; r < hi; ++r) {
        for (VertexId v : g.topological_order()) {
            const auto ps = g.parents(v);
            if (ps.empty()) {
                const auto& dist = scm.root_dist(v);
                const double u = unit_draw(rng);
                double acc = 0;
                int c = static_cast<int>(dist.size()) - 1;
                for (std::size_t k = 0; k < dist.size(); ++k) {
                    acc += dist[k];
                    if (u < acc) {
                        c = static_cast<int>(k);
                        break;
                    }
                }
                while (dist[static_cast<std::size_t>(c)] == 0.0 && c > 0) --c;
                codes[v] = c;
                continue;
            }
            contrib.resize(ps.size());
            for (std::size_t i = 0; i < ps.size(); ++i) {
                const auto e = static_cast<std::size_t>(scm.parent_edges(v)[i]);
                const bool transmit = unit_draw(rng) < scm.edge(e).alpha;
                contrib[i] = transmit ? scm.contribution(e, codes[ps[i]]) : 0;
            }
            codes[v] = scm.combine(v, contrib);
        }
        for (std::size_t v = 0; v < scm.size(); ++v) cols[v][r] = codes[v];
    }
}

Dataset to_dataset(const DropoutScm& scm, std::vector<std::vector<double>> cols) {
    Dataset ds;
    for (std::size_t v = 0; v < scm.size(); ++v) {
        const auto id = static_cast<VertexId>(v);
        const auto role = scm.dsd().role(id);
        ColumnInfo info{scm.dag().name(id), ColumnKind::Discrete, scm.cardinality(id),
                        role == VertexRole::Hidden || role == VertexRole::Mechanism};
        ds.add_column(std::move(info), std::move(cols[v]));
    }
    return ds;
}

} // namespace

Dataset sample_serial(const DropoutScm& scm, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InputError("sample size must be at least 1");
    std::vector<std::vector<double>> cols(scm.size(), std::vector<double>(n));
    const std::size_t blocks = (n + kSampleBlock - 1) / kSampleBlock;
    for (std::size_t b = 0; b < blocks; ++b)
        sample_block(scm, b * kSampleBlock, std::min(n, (b + 1) * kSampleBlock), seed, b, cols);
    return to_dataset(scm, std::move(cols));
}

Dataset sample(const DropoutScm& scm, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InputError("sample size must be at least 1");
    std::vector<std::vector<double>> cols(scm.size(), std::vector<double>(n));
    const std::size_t blocks = (n + kSampleBlock - 1) / kSampleBlock;
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
    for (std::size_t b = 0; b < blocks; ++b)
        sample_block(scm, b * kSampleBlock, std::min(n, (b + 1) * kSampleBlock), seed, b, cols);
    return to_dataset(scm, std::move(cols));
}

double alpha_to_children(const DropoutScm& scm, VertexId u, std::span<const VertexId> x) {
    const Dag& g = scm.dag();
    double keep = 1.0;
    for (VertexId c : g.children(u))
        if (std::find(x.begin(), x.end(), c) != x.end()) keep *= 1.0 - scm.alpha(u, c);
    for (VertexId v : x)
        if (!g.contains(v)) throw InputError("unknown vertex id " + std::to_string(v));
    return 1.0 - keep;
}

double path_transmission(const DropoutScm& scm, std::span<const VertexId> path) {
    const Dag& g = scm.dag();
    if (path.size() < 2) throw InputError("path needs at least two vertices");
    std::vector<VertexId> seen(path.begin(), path.end());
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) throw InputError("path repeats a vertex");
    double prod = 1.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const VertexId a = path[i], b = path[i + 1];
        if (g.has_edge(a, b))
            prod *= scm.alpha(a, b);
        else if (g.has_edge(b, a))
            prod *= scm.alpha(b, a);
        else
            throw InputError(g.name(a) + " and " + g.name(b) + " are not adjacent");
        if (i > 0 && g.has_edge(path[i - 1], a) && g.has_edge(b, a))
            throw InputError("path has a collider at " + g.name(a));
    }
    return prod;
}

DropoutScm split_separable(const DropoutScm& scm, VertexId v) {
    const Dag& g = scm.dag();
    const auto& nm = g.name(v);
    if (g.parents(v).size() < 2) throw InputError("'" + nm + "' has fewer than two parents; nothing to split");
    if (!scm.invertible(v)) throw InputError("'" + nm + "' has a lossy combiner and is not separable");
    if (!g.children(v).empty()) throw InputError("'" + nm + "' has children and cannot be split");

    auto remap = [v](VertexId x) { return x > v ? x - 1 : x; };
    std::vector<std::string> names;
    std::vector<VertexRole> roles;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (static_cast<VertexId>(i) == v) continue;
        names.push_back(g.name(static_cast<VertexId>(i)));
        roles.push_back(scm.dsd().role(static_cast<VertexId>(i)));
    }
    std::vector<Edge> edges;
    std::vector<EdgeParams> params;
    for (std::size_t i = 0; i < g.edges().size(); ++i) {
        const auto& e = g.edges()[i];
        if (e.child == v) continue;
        edges.push_back({remap(e.parent), remap(e.child)});
        params.push_back(scm.edge(i));
    }
    for (VertexId p : g.parents(v)) {
        const auto id = static_cast<VertexId>(names.size());
        names.push_back(nm + "^(" + g.name(p) + ")");
        roles.push_back(scm.dsd().role(v));
        edges.push_back({remap(p), id});
        params.push_back(scm.edge(*g.edge_index(p, v)));
    }
    std::map<VertexId, std::vector<double>> roots;
    for (const auto& [r, d] : scm.root_dists()) roots[remap(r)] = d;
    std::map<VertexId, Combiner> combiners;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto id = static_cast<VertexId>(i);
        if (id == v || scm.is_root(id)) continue;
        combiners[remap(id)] = scm.combiner(id);
    }
    DistributionShiftDiagram dsd(Dag(std::move(names), std::move(edges)), std::move(roles));
    return DropoutScm(std::move(dsd), std::move(params), std::move(roots), std::move(combiners));
}

} // namespace per
