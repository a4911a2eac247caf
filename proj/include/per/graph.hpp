#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace per {

using VertexId = int;
using VertexSet = std::vector<VertexId>;

struct Edge {
    VertexId parent;
    VertexId child;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Directed acyclic graph over dense integer ids with a side name table.
// Construction rejects cycles, self-loops, duplicate edges and duplicate names.
class Dag {
public:
    Dag() = default;
    Dag(std::vector<std::string> names, std::vector<Edge> edges);

    std::size_t size() const { return names_.size(); }
    const std::string& name(VertexId v) const;
    std::optional<VertexId> find(std::string_view name) const;
    VertexId id(std::string_view name) const; // throws InputError

    std::span<const VertexId> parents(VertexId v) const;
    std::span<const VertexId> children(VertexId v) const;
    const std::vector<Edge>& edges() const { return edges_; }
    bool has_edge(VertexId parent, VertexId child) const;
    bool adjacent(VertexId a, VertexId b) const { return has_edge(a, b) || has_edge(b, a); }
    std::optional<std::size_t> edge_index(VertexId parent, VertexId child) const;

    const std::vector<VertexId>& topological_order() const { return topo_; }
    bool contains(VertexId v) const { return v >= 0 && static_cast<std::size_t>(v) < size(); }

    // Membership masks; the seed vertices are included.
    std::vector<bool> ancestors(std::span<const VertexId> of) const;
    std::vector<bool> descendants(std::span<const VertexId> of) const;

private:
    void check(VertexId v) const;

    std::vector<std::string> names_;
    std::vector<Edge> edges_;
    std::vector<std::vector<VertexId>> parents_;
    std::vector<std::vector<VertexId>> children_;
    std::vector<VertexId> topo_;
};

// True iff every path between `a` and `b` is blocked given `z`. Uses the
// active-trail reachability sweep, linear in the graph size.
// Throws InputError on unknown ids or overlapping sets.
bool d_separated(const Dag& dag, std::span<const VertexId> a, std::span<const VertexId> b,
                 std::span<const VertexId> z);

enum class VertexRole { Label, Hidden, Proxy, Mechanism };

std::string_view to_string(VertexRole role);
VertexRole parse_role(std::string_view text); // throws InputError

class DistributionShiftDiagram {
public:
    DistributionShiftDiagram() = default;
    DistributionShiftDiagram(Dag dag, std::vector<VertexRole> roles);

    const Dag& dag() const { return dag_; }
    VertexRole role(VertexId v) const { return roles_.at(static_cast<std::size_t>(v)); }
    const std::vector<VertexRole>& roles() const { return roles_; }

    VertexSet with_role(VertexRole role) const;
    VertexSet hidden() const { return with_role(VertexRole::Hidden); }
    VertexSet proxies() const { return with_role(VertexRole::Proxy); }
    VertexSet mechanisms() const { return with_role(VertexRole::Mechanism); }

    // The unique label vertex; throws InputError if there is not exactly one.
    VertexId label() const;
    // The mechanism attached to hidden vertex `u`, if any (first one found).
    std::optional<VertexId> mechanism_of(VertexId u) const;
    // The hidden vertex a mechanism is attached to, if any.
    std::optional<VertexId> hidden_of(VertexId m) const;

    VertexSet hidden_parents(VertexId v) const;

private:
    Dag dag_;
    std::vector<VertexRole> roles_;
};

struct Violation {
    std::string kind;
    std::string message;
    VertexSet vertices;
};

// Checks the distribution-shift-diagram rules: one label; no hidden-hidden or
// proxy-proxy edges; every hidden vertex adjacent to the label; every label
// neighbour hidden; proxies have >= 1 hidden parent, no mechanism parent and
// no children; each mechanism has a single edge, to its own hidden vertex
// (either direction), and each hidden vertex has exactly one mechanism.
std::vector<Violation> validate_dsd(const DistributionShiftDiagram& dsd);

struct HiddenPartition {
    VertexSet good;
    VertexSet bad;
    // Hidden vertices where the d-separation test disagrees with the
    // good = PA(Y), bad = CH(Y) shortcut.
    VertexSet disagreements;
};

// good: the mechanism is d-connected to Y marginally (non-collider);
// bad: d-separated marginally but d-connected given the hidden vertex.
// Throws InputError if the diagram is invalid.
HiddenPartition classify_hidden(const DistributionShiftDiagram& dsd);

struct ProxyPartition {
    VertexSet good;
    VertexSet bad;
    VertexSet ambiguous;
};

enum class ProxyClass { Good, Bad, Ambiguous };
std::string_view to_string(ProxyClass c);
ProxyClass parse_proxy_class(std::string_view text); // throws InputError

// good = CH(U_good) \ CH(U_bad), bad = CH(U_bad) \ CH(U_good), ambiguous = both.
ProxyPartition classify_proxies(const DistributionShiftDiagram& dsd, const HiddenPartition& hp);

// Class of a single proxy under a partition; throws InputError if absent.
ProxyClass proxy_class(const ProxyPartition& pp, VertexId v);

// Sorted-set helpers used across modules.
VertexSet make_set(VertexSet v);
bool set_contains(std::span<const VertexId> sorted, VertexId v);
VertexSet set_union(std::span<const VertexId> a, std::span<const VertexId> b);
VertexSet set_difference(std::span<const VertexId> a, std::span<const VertexId> b);
VertexSet set_intersection(std::span<const VertexId> a, std::span<const VertexId> b);

} // namespace per
