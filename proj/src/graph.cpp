#include "per/graph.hpp"

#include "per/error.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <map>
#include <set>

namespace per {

Dag::Dag(std::vector<std::string> names, std::vector<Edge> edges)
    : names_(std::move(names)), edges_(std::move(edges)) {
    const auto n = names_.size();
    std::set<std::string_view> seen;
    for (const auto& nm : names_) {
        if (nm.empty()) throw InputError("vertex with empty name");
        if (!seen.insert(nm).second) throw InputError("duplicate vertex name '" + nm + "'");
    }
    parents_.assign(n, {});
    children_.assign(n, {});
    std::set<Edge> unique;
    for (const auto& e : edges_) {
        if (!contains(e.parent) || !contains(e.child))
            throw InputError("edge references unknown vertex id");
        if (e.parent == e.child) throw InputError("self-loop on '" + names_[e.parent] + "'");
        if (!unique.insert(e).second)
            throw InputError("duplicate edge " + names_[e.parent] + " -> " + names_[e.child]);
        children_[e.parent].push_back(e.child);
        parents_[e.child].push_back(e.parent);
    }

    // Kahn's algorithm; ties broken by smallest id so the order is canonical.
    std::vector<int> indeg(n, 0);
    for (const auto& e : edges_) ++indeg[e.child];
    std::set<VertexId> ready;
    for (std::size_t v = 0; v < n; ++v)
        if (indeg[v] == 0) ready.insert(static_cast<VertexId>(v));
    while (!ready.empty()) {
        const VertexId v = *ready.begin();
        ready.erase(ready.begin());
        topo_.push_back(v);
        for (VertexId c : children_[v])
            if (--indeg[c] == 0) ready.insert(c);
    }
    if (topo_.size() != n) throw InputError("graph has a directed cycle");
}

void Dag::check(VertexId v) const {
    if (!contains(v)) throw InputError("unknown vertex id " + std::to_string(v));
}

const std::string& Dag::name(VertexId v) const {
    check(v);
    return names_[v];
}

std::optional<VertexId> Dag::find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<VertexId>(i);
    return std::nullopt;
}

VertexId Dag::id(std::string_view name) const {
    if (auto v = find(name)) return *v;
    throw InputError("unknown vertex '" + std::string(name) + "'");
}

std::span<const VertexId> Dag::parents(VertexId v) const {
    check(v);
    return parents_[v];
}

std::span<const VertexId> Dag::children(VertexId v) const {
    check(v);
    return children_[v];
}

bool Dag::has_edge(VertexId parent, VertexId child) const {
    if (!contains(parent) || !contains(child)) return false;
    const auto& ch = children_[parent];
    return std::find(ch.begin(), ch.end(), child) != ch.end();
}

std::optional<std::size_t> Dag::edge_index(VertexId parent, VertexId child) const {
    for (std::size_t i = 0; i < edges_.size(); ++i)
        if (edges_[i].parent == parent && edges_[i].child == child) return i;
    return std::nullopt;
}

std::vector<bool> Dag::ancestors(std::span<const VertexId> of) const {
    std::vector<bool> mark(size(), false);
    std::vector<VertexId> stack;
    for (VertexId v : of) {
        check(v);
        if (!mark[v]) {
            mark[v] = true;
            stack.push_back(v);
        }
    }
    while (!stack.empty()) {
        const VertexId v = stack.back();
        stack.pop_back();
        for (VertexId p : parents_[v])
            if (!mark[p]) {
                mark[p] = true;
                stack.push_back(p);
            }
    }
    return mark;
}

std::vector<bool> Dag::descendants(std::span<const VertexId> of) const {
    std::vector<bool> mark(size(), false);
    std::vector<VertexId> stack;
    for (VertexId v : of) {
        check(v);
        if (!mark[v]) {
            mark[v] = true;
            stack.push_back(v);
        }
    }
    while (!stack.empty()) {
        const VertexId v = stack.back();
        stack.pop_back();
        for (VertexId c : children_[v])
            if (!mark[c]) {
                mark[c] = true;
                stack.push_back(c);
            }
    }
    return mark;
}

bool d_separated(const Dag& dag, std::span<const VertexId> a, std::span<const VertexId> b,
                 std::span<const VertexId> z) {
    const auto n = dag.size();
    std::vector<char> in_z(n, 0), in_a(n, 0), in_b(n, 0);
    auto load = [&](std::span<const VertexId> s, std::vector<char>& mask) {
        for (VertexId v : s) {
            if (!dag.contains(v)) throw InputError("unknown vertex id " + std::to_string(v));
            mask[v] = 1;
        }
    };
    load(a, in_a);
    load(b, in_b);
    load(z, in_z);
    for (std::size_t v = 0; v < n; ++v)
        if ((in_a[v] && in_b[v]) || (in_a[v] && in_z[v]) || (in_b[v] && in_z[v]))
            throw InputError("d-separation query sets overlap at '" + dag.name(static_cast<VertexId>(v)) + "'");
    if (a.empty() || b.empty()) return true;

    // Vertices that are in z or have a descendant in z open colliders.
    const auto opens_collider = dag.ancestors(z);

    // State: (vertex, arrived-from-child). Arriving "up" means the trail
    // enters v along an edge v -> previous.
    enum : int { kUp = 0, kDown = 1 };
    std::vector<std::array<char, 2>> visited(n, {0, 0});
    std::deque<std::pair<VertexId, int>> queue;
    for (VertexId v : a) queue.emplace_back(v, kUp);

    while (!queue.empty()) {
        auto [v, dir] = queue.front();
        queue.pop_front();
        if (visited[v][dir]) continue;
        visited[v][dir] = 1;
        if (!in_z[v] && in_b[v]) return false;

        if (dir == kUp) {
            if (in_z[v]) continue;
            for (VertexId p : dag.parents(v)) queue.emplace_back(p, kUp);
            for (VertexId c : dag.children(v)) queue.emplace_back(c, kDown);
        } else {
            if (!in_z[v])
                for (VertexId c : dag.children(v)) queue.emplace_back(c, kDown);
            if (opens_collider[v])
                for (VertexId p : dag.parents(v)) queue.emplace_back(p, kUp);
        }
    }
    return true;
}

std::string_view to_string(VertexRole role) {
    switch (role) {
    case VertexRole::Label: return "label";
    case VertexRole::Hidden: return "hidden";
    case VertexRole::Proxy: return "proxy";
    case VertexRole::Mechanism: return "mechanism";
    }
    return "?";
}

VertexRole parse_role(std::string_view text) {
    if (text == "label") return VertexRole::Label;
    if (text == "hidden") return VertexRole::Hidden;
    if (text == "proxy") return VertexRole::Proxy;
    if (text == "mechanism") return VertexRole::Mechanism;
    throw InputError("unknown vertex role '" + std::string(text) + "'");
}

std::string_view to_string(ProxyClass c) {
    switch (c) {
    case ProxyClass::Good: return "good";
    case ProxyClass::Bad: return "bad";
    case ProxyClass::Ambiguous: return "ambiguous";
    }
    return "?";
}

ProxyClass parse_proxy_class(std::string_view text) {
    if (text == "good" || text == "Good") return ProxyClass::Good;
    if (text == "bad" || text == "Bad") return ProxyClass::Bad;
    if (text == "ambiguous" || text == "Ambiguous") return ProxyClass::Ambiguous;
    throw InputError("unknown proxy class '" + std::string(text) + "'");
}

DistributionShiftDiagram::DistributionShiftDiagram(Dag dag, std::vector<VertexRole> roles)
    : dag_(std::move(dag)), roles_(std::move(roles)) {
    if (roles_.size() != dag_.size()) throw InputError("role table size does not match vertex count");
}

VertexSet DistributionShiftDiagram::with_role(VertexRole role) const {
    VertexSet out;
    for (std::size_t v = 0; v < roles_.size(); ++v)
        if (roles_[v] == role) out.push_back(static_cast<VertexId>(v));
    return out;
}

VertexId DistributionShiftDiagram::label() const {
    const auto labels = with_role(VertexRole::Label);
    if (labels.size() != 1)
        throw InputError("diagram must have exactly one label vertex, found " + std::to_string(labels.size()));
    return labels.front();
}

std::optional<VertexId> DistributionShiftDiagram::mechanism_of(VertexId u) const {
    for (VertexId p : dag_.parents(u))
        if (role(p) == VertexRole::Mechanism) return p;
    for (VertexId c : dag_.children(u))
        if (role(c) == VertexRole::Mechanism) return c;
    return std::nullopt;
}

std::optional<VertexId> DistributionShiftDiagram::hidden_of(VertexId m) const {
    for (VertexId c : dag_.children(m))
        if (role(c) == VertexRole::Hidden) return c;
    for (VertexId p : dag_.parents(m))
        if (role(p) == VertexRole::Hidden) return p;
    return std::nullopt;
}

VertexSet DistributionShiftDiagram::hidden_parents(VertexId v) const {
    VertexSet out;
    for (VertexId p : dag_.parents(v))
        if (role(p) == VertexRole::Hidden) out.push_back(p);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Violation> validate_dsd(const DistributionShiftDiagram& dsd) {
    const Dag& g = dsd.dag();
    std::vector<Violation> out;
    auto nm = [&](VertexId v) { return g.name(v); };
    auto add = [&](std::string kind, std::string msg, VertexSet vs) {
        out.push_back({std::move(kind), std::move(msg), std::move(vs)});
    };

    const auto labels = dsd.with_role(VertexRole::Label);
    if (labels.size() != 1) {
        add("label-count", "expected exactly one label vertex, found " + std::to_string(labels.size()), labels);
    }
    const bool has_label = labels.size() == 1;
    const VertexId label = has_label ? labels.front() : -1;

    for (const auto& e : g.edges()) {
        const auto rp = dsd.role(e.parent), rc = dsd.role(e.child);
        if (rp == VertexRole::Hidden && rc == VertexRole::Hidden)
            add("hidden-hidden edge", "hidden-hidden edge " + nm(e.parent) + " -> " + nm(e.child),
                {e.parent, e.child});
        if (rp == VertexRole::Proxy && rc == VertexRole::Proxy)
            add("proxy-proxy edge", "proxy-proxy edge " + nm(e.parent) + " -> " + nm(e.child),
                {e.parent, e.child});
    }

    for (VertexId u : dsd.hidden()) {
        if (has_label && !g.adjacent(u, label))
            add("hidden-not-adjacent-to-label", "hidden vertex " + nm(u) + " is neither a parent nor a child of the label",
                {u});
        int mechs = 0;
        for (VertexId p : g.parents(u)) mechs += dsd.role(p) == VertexRole::Mechanism;
        for (VertexId c : g.children(u)) mechs += dsd.role(c) == VertexRole::Mechanism;
        if (mechs != 1)
            add("mechanism-count", "hidden vertex " + nm(u) + " has " + std::to_string(mechs) + " mechanisms, expected 1",
                {u});
    }

    if (has_label) {
        for (VertexId p : g.parents(label)) {
            if (dsd.role(p) == VertexRole::Mechanism)
                add("label-mechanism-parent", "label has mechanism parent " + nm(p), {p, label});
            else if (dsd.role(p) != VertexRole::Hidden)
                add("label-neighbour-not-hidden", "label parent " + nm(p) + " is not hidden", {p, label});
        }
        for (VertexId c : g.children(label))
            if (dsd.role(c) != VertexRole::Hidden)
                add("label-neighbour-not-hidden", "label child " + nm(c) + " is not hidden", {label, c});
    }

    for (VertexId v : dsd.proxies()) {
        bool hidden_parent = false;
        for (VertexId p : g.parents(v)) {
            hidden_parent |= dsd.role(p) == VertexRole::Hidden;
            if (dsd.role(p) == VertexRole::Mechanism)
                add("proxy-mechanism-parent", "proxy " + nm(v) + " has mechanism parent " + nm(p), {p, v});
        }
        if (!hidden_parent) add("proxy-without-hidden-parent", "proxy " + nm(v) + " has no hidden parent", {v});
        for (VertexId c : g.children(v))
            if (dsd.role(c) != VertexRole::Proxy) // proxy-proxy edges are reported above
                add("proxy-has-children", "proxy " + nm(v) + " is a parent of " + nm(c), {v, c});
    }

    for (VertexId m : dsd.mechanisms()) {
        const auto deg = g.parents(m).size() + g.children(m).size();
        const auto u = dsd.hidden_of(m);
        if (deg != 1 || !u)
            add("mechanism-edge", "mechanism " + nm(m) + " must have exactly one edge, to a hidden vertex", {m});
    }
    return out;
}

HiddenPartition classify_hidden(const DistributionShiftDiagram& dsd) {
    if (auto v = validate_dsd(dsd); !v.empty())
        throw InputError("invalid distribution shift diagram: " + v.front().message);
    const Dag& g = dsd.dag();
    const VertexId y = dsd.label();
    HiddenPartition hp;
    for (VertexId u : dsd.hidden()) {
        const VertexId m = *dsd.mechanism_of(u);
        const VertexId mset[] = {m};
        const VertexId yset[] = {y};
        const VertexId uset[] = {u};
        const bool connected = !d_separated(g, mset, yset, {});
        const bool opened = !connected && !d_separated(g, mset, yset, uset);
        if (connected)
            hp.good.push_back(u);
        else if (opened)
            hp.bad.push_back(u);
        else
            throw std::logic_error("hidden vertex " + g.name(u) + " fits neither d-separation pattern");
        const bool shortcut_good = g.has_edge(u, y);
        if (shortcut_good != connected) hp.disagreements.push_back(u);
    }
    return hp;
}

ProxyPartition classify_proxies(const DistributionShiftDiagram& dsd, const HiddenPartition& hp) {
    ProxyPartition pp;
    for (VertexId v : dsd.proxies()) {
        bool good = false, bad = false;
        for (VertexId p : dsd.dag().parents(v)) {
            good |= set_contains(hp.good, p);
            bad |= set_contains(hp.bad, p);
        }
        if (good && bad)
            pp.ambiguous.push_back(v);
        else if (good)
            pp.good.push_back(v);
        else if (bad)
            pp.bad.push_back(v);
        else
            throw InputError("proxy " + dsd.dag().name(v) + " has no classified hidden parent");
    }
    return pp;
}

ProxyClass proxy_class(const ProxyPartition& pp, VertexId v) {
    if (set_contains(pp.good, v)) return ProxyClass::Good;
    if (set_contains(pp.bad, v)) return ProxyClass::Bad;
    if (set_contains(pp.ambiguous, v)) return ProxyClass::Ambiguous;
    throw InputError("vertex " + std::to_string(v) + " is not a classified proxy");
}

VertexSet make_set(VertexSet v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

bool set_contains(std::span<const VertexId> sorted, VertexId v) {
    return std::binary_search(sorted.begin(), sorted.end(), v);
}

VertexSet set_union(std::span<const VertexId> a, std::span<const VertexId> b) {
    VertexSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

VertexSet set_difference(std::span<const VertexId> a, std::span<const VertexId> b) {
    VertexSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

VertexSet set_intersection(std::span<const VertexId> a, std::span<const VertexId> b) {
    VertexSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

} // namespace per
