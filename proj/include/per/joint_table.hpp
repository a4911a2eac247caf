#pragma once

#include "per/graph.hpp"

#include <span>
#include <vector>

namespace per {

// Dense probability table over discrete variables. Row-major with the last
// variable varying fastest. Codes run over [0, cardinality).
class JointTable {
public:
    static constexpr double kMassTolerance = 1e-9;

    JointTable() = default;
    // Throws InputError on shape mismatch, negative entries, duplicate
    // variables or total mass further than kMassTolerance from 1.
    JointTable(std::vector<VertexId> vars, std::vector<int> cards, std::vector<double> probs);

    const std::vector<VertexId>& variables() const { return vars_; }
    const std::vector<int>& cardinalities() const { return cards_; }
    const std::vector<double>& probabilities() const { return probs_; }
    std::size_t size() const { return probs_.size(); }

    bool has(VertexId v) const;
    std::size_t position(VertexId v) const; // throws InputError on unknown variable
    double at(std::span<const int> codes) const;

    // Marginal over `keep`, in the order given.
    JointTable marginal(std::span<const VertexId> keep) const;

private:
    std::vector<VertexId> vars_;
    std::vector<int> cards_;
    std::vector<double> probs_;
};

} // namespace per
