#pragma once

#include "per/dataset.hpp"
#include "per/graph.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace per {

// Undirected graph on proxies: an edge joins two proxies that stay dependent
// given the label. Vertices are indices into `names`; edges have i < j.
struct DependenceGraph {
    std::vector<std::string> names;
    std::vector<std::pair<int, int>> edges;
    // Pairs the statistical test could not decide. Never used for propagation.
    std::vector<std::pair<int, int>> undetermined;

    int index(const std::string& name) const; // throws InputError
    bool has_edge(int i, int j) const;
    std::vector<int> neighbours(int i) const;
};

// Edge iff the two proxies are d-connected given Y. Throws InputError on an
// invalid diagram.
DependenceGraph dependence_graph_oracle(const DistributionShiftDiagram& dsd);

struct CiTestOptions {
    double alpha_level = 0.01;
    std::size_t min_stratum = 30; // fewer rows in any label stratum: undetermined
    int bins = 8;                 // equal-frequency bins for Real columns
};

// Per-pair G-test of independence inside each label stratum, combined across
// strata with Fisher's method. Edge iff the combined p-value < alpha_level.
DependenceGraph dependence_graph_statistical(const Dataset& ds, const std::string& y,
                                             const std::vector<std::string>& proxies, const CiTestOptions& opts = {});
DependenceGraph dependence_graph_statistical_serial(const Dataset& ds, const std::string& y,
                                                    const std::vector<std::string>& proxies,
                                                    const CiTestOptions& opts = {});

// G-test p-value for two code vectors (codes >= 0; negative codes are skipped).
double g_test_pvalue(const std::vector<int>& a, const std::vector<int>& b);

using SeedSet = std::map<std::string, ProxyClass>;

enum class LabelClass { Good, Bad, Ambiguous, Unlabeled };
std::string_view to_string(LabelClass c);

struct Labels {
    bool good = false;
    bool bad = false;
    bool seed = false;
    LabelClass cls = LabelClass::Unlabeled;
};
using LabelState = std::map<std::string, Labels>;

// Good and Bad seeds label their neighbours; Ambiguous seeds propagate
// nothing. Seeds keep their known class. Throws InputError on an unknown seed.
LabelState bootstrap_labels(const DependenceGraph& g, const SeedSet& seeds);

struct SeedCondition {
    int index = 0;
    bool passed = false;
    bool skipped = false;
    std::string note;
    std::vector<std::string> witnesses; // seeds that satisfy the condition
    std::vector<std::string> missing;   // hidden vertices left uncovered
};

struct SeedReport {
    std::vector<SeedCondition> conditions; // indices 1..4
    bool passed() const;
};

// Structural conditions under which bootstrapping labels every proxy
// correctly:
//  1. partial faithfulness (not checkable from the graph; skipped);
//  2. a Good seed child for each good hidden child of Y;
//  3. a Good seed child of some hidden parent of Y (passes if Y has none);
//  4. a Bad seed child for each bad hidden vertex.
// Throws InputError on seeds that are not proxies.
SeedReport verify_seed_conditions(const DistributionShiftDiagram& dsd, const SeedSet& seeds);

} // namespace per
