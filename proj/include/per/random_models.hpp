#pragma once

#include "per/dropout_scm.hpp"
#include "per/graph.hpp"

#include <random>

namespace per {

// The running example with three hidden vertices and seven proxies:
// U1 -> Y -> {U2, U3}; M1 -> U1, M2 -> U2, U3 -> M3.
DistributionShiftDiagram mixed_example_dsd();

// M_G -> U_G -> Y -> U_B <- M_B; U_G -> V_G, U_B -> V_B, {U_G, U_B} -> V_A.
DistributionShiftDiagram separable_example_dsd();

struct SeparableAlphas {
    double mg_ug = 0.8, ug_y = 0.9, y_ub = 0.7, mb_ub = 0.8;
    double ug_vg = 0.7, ub_vb = 0.7, ug_va = 0.6, ub_va = 0.6;
};

// Dropout model on separable_example_dsd() with uniform mechanisms over `mechanism_symbols`
// and Invertible combiners everywhere.
DropoutScm separable_example_scm(const SeparableAlphas& alphas = {}, int mechanism_symbols = 2);

struct RandomDsdOptions {
    int n_causes = 1;
    int n_effects = 1;
    int n_proxies = 3;
    double edge_density = 0.5;           // chance of each hidden -> proxy edge
    double reversed_mechanism_prob = 0.0; // effect U gets U -> M instead of M -> U
};

// Valid DSD named Y, U1.., M1.., V1..; every proxy has >= 1 hidden parent.
DistributionShiftDiagram random_dsd(const RandomDsdOptions& opts, std::mt19937_64& rng);

struct RandomScmOptions {
    int max_symbols = 4;             // root alphabets are 2..max_symbols
    double alpha_one_prob = 0.15;    // chance an edge gets alpha exactly 1
    double mechanism_one_prob = 0.4; // chance an M -> U edge gets alpha 1
    double lossy_bad_prob = 0.7;     // chance a bad U gets a sum_mod combiner
};

// Random alphas, permutations and root distributions over a given DSD.
DropoutScm random_scm(const DistributionShiftDiagram& dsd, const RandomScmOptions& opts, std::mt19937_64& rng);

// Small random dropout model (at most 6 vertices): Y, one or two hidden
// vertices each a cause or an effect with mechanism M -> U, and proxies.
DropoutScm random_small_scm(std::mt19937_64& rng, const RandomScmOptions& opts = {});

} // namespace per
