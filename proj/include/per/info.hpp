#pragma once

#include "per/dataset.hpp"
#include "per/dropout_scm.hpp"
#include "per/joint_table.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace per {

struct Tolerance {
    static constexpr double exact = 1e-9;       // closed form vs enumeration
    static constexpr double nonnegative = 1e-12; // entropies and MI
};

// All quantities in bits; 0 log 0 = 0. Sets must be pairwise disjoint and
// inside the table, otherwise InputError.
double entropy(const JointTable& t, std::span<const VertexId> a);
double conditional_entropy(const JointTable& t, std::span<const VertexId> a, std::span<const VertexId> given);
double mutual_info(const JointTable& t, std::span<const VertexId> a, std::span<const VertexId> b);
double conditional_mi(const JointTable& t, std::span<const VertexId> a, std::span<const VertexId> b,
                      std::span<const VertexId> z);
// I(a:b) - I(a:b|c).
double interaction_info(const JointTable& t, std::span<const VertexId> a, std::span<const VertexId> b,
                        std::span<const VertexId> c);

// I(Y : m | x) by exact enumeration. m must be a Mechanism, x proxies.
double context_sensitivity(const DropoutScm& scm, VertexId m, std::span<const VertexId> x,
                           const EnumerateOptions& opts = {});
// I(u : x) by exact enumeration.
double redundancy(const DropoutScm& scm, VertexId u, std::span<const VertexId> x, const EnumerateOptions& opts = {});

// Closed forms for the dropout setting. Each throws InputError when the model
// is outside the domain where the identity is exact:
//  redundancy: u is never Null, the children of u in x are Invertible, and
//    every other hidden parent of x is d-separated from u.
//  good: M -> U -> Y with Y and x Invertible, and every other hidden parent
//    of x d-separated from u.
//  bad: u is bad, x are single-parent children of u, and u's combiner yields
//    Null only for the all-Null tuple.
double closed_form_redundancy(const DropoutScm& scm, VertexId u, std::span<const VertexId> x,
                              const EnumerateOptions& opts = {});
double closed_form_sensitivity_good(const DropoutScm& scm, VertexId u, std::span<const VertexId> x,
                                    const EnumerateOptions& opts = {});
double closed_form_sensitivity_bad(const DropoutScm& scm, VertexId u, std::span<const VertexId> x,
                                   const EnumerateOptions& opts = {});

struct Binning {
    int bins = 8; // equal-frequency bins for Real columns
};

struct MiEstimate {
    double bits = 0;
    bool valid = false;
    std::size_t rows_used = 0;
    std::size_t strata = 0;       // observed conditioning strata
    std::size_t empty_strata = 0; // declared discrete strata with no rows
    std::string reason;           // set when !valid
};

// Plug-in I(a:b|z) on discretised columns. Rows with a missing value in any
// involved column are dropped. No usable rows gives valid = false, bits = NaN.
MiEstimate estimate_mi(const Dataset& ds, std::span<const std::string> a, std::span<const std::string> b,
                       std::span<const std::string> z, const Binning& binning = {});

// Dense codes for one column: Discrete values ranked, Real values binned.
// Missing values map to -1.
std::vector<int> discretize(std::span<const double> values, ColumnKind kind, int bins);

struct BoundReport {
    std::string name;
    std::string vars;
    double lhs = 0;
    double rhs = 0;
    double slack = 0; // rhs - lhs
    bool satisfied = true;
    bool skipped = false;
    std::string reason;
};

// Individual checkers on an explicit table. Preconditions are decided by
// d-separation on `dag`; a failed precondition gives a skipped report.
BoundReport check_dpi(const Dag& dag, const JointTable& t, std::span<const VertexId> a, std::span<const VertexId> b,
                      std::span<const VertexId> c, std::span<const VertexId> d, double tol = Tolerance::exact);
BoundReport check_positive_ii(const Dag& dag, const JointTable& t, std::span<const VertexId> a,
                              std::span<const VertexId> b, std::span<const VertexId> c,
                              double tol = Tolerance::exact);
// I(M:Y|X,M') <= H(U|X) for good U.
BoundReport check_applied_dpi(const DistributionShiftDiagram& dsd, const JointTable& t, VertexId u,
                              std::span<const VertexId> x, std::span<const VertexId> m_prime,
                              double tol = Tolerance::exact);
// I(M:Y|X,M') <= I(U:X'|Y) <= I(U:X') for bad U, X' = X n CH(U). Two reports.
std::vector<BoundReport> check_collider_dpi(const DistributionShiftDiagram& dsd, const JointTable& t, VertexId u,
                                            std::span<const VertexId> x, std::span<const VertexId> m_prime,
                                            double tol = Tolerance::exact);
// I(Vi,Vj:U) >= I(Vi:Vj) when Vi and Vj are d-connected but separated by U.
BoundReport check_common_cause(const Dag& dag, const JointTable& t, VertexId vi, VertexId vj, VertexId u,
                               double tol = Tolerance::exact);

struct BoundOptions {
    int subsets = 4; // random (X, M') draws per hidden vertex
    std::uint64_t seed = 0;
    double tolerance = Tolerance::exact;
    EnumerateOptions enumerate;
};

// Enumerates the full joint once and runs every checker: DPI and positive
// interaction information over all single-vertex triples whose precondition
// holds, the applied/collider bounds over seeded random (X, M') draws for
// each hidden vertex, and the common-cause bound over all eligible triples.
std::vector<BoundReport> check_bounds(const DropoutScm& scm, const BoundOptions& opts = {});

} // namespace per
