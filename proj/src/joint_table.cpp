#include "per/joint_table.hpp"

#include "per/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace per {

JointTable::JointTable(std::vector<VertexId> vars, std::vector<int> cards, std::vector<double> probs)
    : vars_(std::move(vars)), cards_(std::move(cards)), probs_(std::move(probs)) {
    if (vars_.size() != cards_.size()) throw InputError("joint table: variable and cardinality counts differ");
    auto sorted = vars_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InputError("joint table: duplicate variable");
    std::size_t n = 1;
    for (int c : cards_) {
        if (c < 1) throw InputError("joint table: cardinality must be positive");
        n *= static_cast<std::size_t>(c);
    }
    if (probs_.size() != n) throw InputError("joint table: probability vector has wrong size");
    double total = 0;
    for (double p : probs_) {
        if (!(p >= 0.0)) throw InputError("joint table: negative or NaN probability");
        total += p;
    }
    if (std::abs(total - 1.0) > kMassTolerance)
        throw InputError("joint table: total mass " + std::to_string(total) + " is not 1");
}

bool JointTable::has(VertexId v) const { return std::find(vars_.begin(), vars_.end(), v) != vars_.end(); }

std::size_t JointTable::position(VertexId v) const {
    const auto it = std::find(vars_.begin(), vars_.end(), v);
    if (it == vars_.end()) throw InputError("unknown variable " + std::to_string(v) + " in joint table");
    return static_cast<std::size_t>(it - vars_.begin());
}

double JointTable::at(std::span<const int> codes) const {
    if (codes.size() != vars_.size()) throw InputError("joint table: wrong number of codes");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] < 0 || codes[i] >= cards_[i]) throw InputError("joint table: code out of range");
        idx = idx * static_cast<std::size_t>(cards_[i]) + static_cast<std::size_t>(codes[i]);
    }
    return probs_[idx];
}

JointTable JointTable::marginal(std::span<const VertexId> keep) const {
    std::vector<std::size_t> pos;
    std::vector<int> cards;
    for (VertexId v : keep) {
        pos.push_back(position(v));
        cards.push_back(cards_[pos.back()]);
    }
    std::size_t out_size = 1;
    for (int c : cards) out_size *= static_cast<std::size_t>(c);
    std::vector<double> out(out_size, 0.0);

    // Strides of the kept variables within the output table.
    std::vector<std::size_t> out_stride(vars_.size(), 0);
    {
        std::size_t s = 1;
        for (std::size_t k = keep.size(); k-- > 0;) {
            out_stride[pos[k]] = s;
            s *= static_cast<std::size_t>(cards[k]);
        }
    }
    std::vector<int> code(vars_.size(), 0);
    std::size_t out_idx = 0;
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        out[out_idx] += probs_[i];
        // Odometer increment, last variable fastest.
        for (std::size_t d = vars_.size(); d-- > 0;) {
            if (++code[d] < cards_[d]) {
                out_idx += out_stride[d];
                break;
            }
            out_idx -= out_stride[d] * static_cast<std::size_t>(cards_[d] - 1);
            code[d] = 0;
        }
    }
    return JointTable(std::vector<VertexId>(keep.begin(), keep.end()), std::move(cards), std::move(out));
}

} // namespace per
