#pragma once

#include "per/dataset.hpp"
#include "per/graph.hpp"
#include "per/joint_table.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace per {

// Value codes: a root vertex with k symbols uses codes [0, k) and is never
// Null. A non-root vertex uses 0 for Null and 1..n for its n symbols.
inline constexpr int kNull = 0;

// How a non-root vertex merges its per-parent contributions. Each
// contribution is 0 (dropped or Null parent) or 1 + a permuted parent symbol.
//  - Invertible: the output is the mixed-radix code of the contribution tuple,
//    so every component is recoverable. The all-Null tuple is Null.
//  - Lossy: `table` maps the tuple code to an output code in [0, out_size);
//    table[0] must be 0 (Null in, Null out).
//  - SumMod: lossy shorthand; Null if all contributions are Null, otherwise
//    1 + (sum of (contribution - 1) over non-Null ones) mod `modulus`.
struct Combiner {
    enum class Kind { Invertible, Lossy, SumMod };
    Kind kind = Kind::Invertible;
    std::vector<int> table;
    int out_size = 0;
    int modulus = 0;

    static Combiner invertible() { return {}; }
    static Combiner lossy(std::vector<int> table, int out_size) {
        return {Kind::Lossy, std::move(table), out_size, 0};
    }
    static Combiner sum_mod(int modulus) { return {Kind::SumMod, {}, 0, modulus}; }
};

struct EdgeParams {
    double alpha = 1.0;
    std::vector<int> perm; // permutation of the parent's symbols; empty = identity
};

class DropoutScm {
public:
    DropoutScm() = default;
    // `edges` is indexed like dsd.dag().edges(). Every root needs a
    // distribution; non-roots without an entry in `combiners` are Invertible.
    // Throws InputError on any inconsistency.
    DropoutScm(DistributionShiftDiagram dsd, std::vector<EdgeParams> edges,
               std::map<VertexId, std::vector<double>> root_dist, std::map<VertexId, Combiner> combiners = {});

    const DistributionShiftDiagram& dsd() const { return dsd_; }
    const Dag& dag() const { return dsd_.dag(); }
    std::size_t size() const { return dag().size(); }

    const EdgeParams& edge(std::size_t index) const { return edges_.at(index); }
    const std::vector<EdgeParams>& edge_params() const { return edges_; }
    double alpha(VertexId parent, VertexId child) const; // throws if no such edge

    bool is_root(VertexId v) const { return dag().parents(v).empty(); }
    int symbols(VertexId v) const { return symbols_.at(static_cast<std::size_t>(v)); }
    int cardinality(VertexId v) const { return symbols(v) + (is_root(v) ? 0 : 1); }
    const std::vector<double>& root_dist(VertexId v) const;
    const std::map<VertexId, std::vector<double>>& root_dists() const { return root_dist_; }
    const Combiner& combiner(VertexId v) const { return combiners_.at(static_cast<std::size_t>(v)); }
    bool invertible(VertexId v) const { return combiner(v).kind == Combiner::Kind::Invertible; }

    // Edge indices of v's incoming edges, ordered as dag().parents(v).
    std::span<const int> parent_edges(VertexId v) const { return parent_edge_.at(static_cast<std::size_t>(v)); }

    // Contribution of edge `index` when it transmits a parent value `code`.
    int contribution(std::size_t index, int parent_code) const;
    // Vertex code from per-parent contributions, ordered as dag().parents(v).
    int combine(VertexId v, std::span<const int> contributions) const;

private:
    DistributionShiftDiagram dsd_;
    std::vector<EdgeParams> edges_;
    std::map<VertexId, std::vector<double>> root_dist_;
    std::vector<Combiner> combiners_; // SumMod resolved to Lossy
    std::vector<int> symbols_;
    std::vector<std::vector<int>> parent_edge_; // per vertex, edge index per parent
};

struct EnumerateOptions {
    // Upper bound on enumeration work (root assignments x dropout patterns of
    // edges with 0 < alpha < 1) and on the output table size.
    double cap = 1e7;
};

// Exact marginal over `vars`: enumerates root values and dropout patterns,
// propagates in topological order and accumulates. Throws CapExceeded.
JointTable enumerate_joint(const DropoutScm& scm, std::span<const VertexId> vars, const EnumerateOptions& opts = {});
JointTable enumerate_joint_serial(const DropoutScm& scm, std::span<const VertexId> vars,
                                  const EnumerateOptions& opts = {});

// n i.i.d. rows, one Discrete column per vertex holding value codes. Rows are
// generated in fixed blocks, each with its own derived seed, so the result
// does not depend on the thread count. Throws InputError for n == 0.
Dataset sample(const DropoutScm& scm, std::size_t n, std::uint64_t seed);
Dataset sample_serial(const DropoutScm& scm, std::size_t n, std::uint64_t seed);
inline constexpr std::size_t kSampleBlock = 4096;

// 1 - prod over children c of u inside x of (1 - alpha(u, c)).
double alpha_to_children(const DropoutScm& scm, VertexId u, std::span<const VertexId> x);

// Product of alpha along a collider-free path given as consecutive vertices.
double path_transmission(const DropoutScm& scm, std::span<const VertexId> path);

// Replaces v by one proxy per parent, named "v^(parent)", each keeping its
// edge's alpha and permutation. Requires an Invertible combiner, >= 2 parents
// and no children.
DropoutScm split_separable(const DropoutScm& scm, VertexId v);

} // namespace per
