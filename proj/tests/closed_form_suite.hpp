#pragma once

// Randomised comparison of the closed-form dropout identities against exact
// enumeration. Shared by the info unit tests and the acceptance binary.

#include "per/error.hpp"
#include "per/info.hpp"
#include "per/random_models.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace closed_form_suite {

using namespace per;

struct Counts {
    int redundancy = 0;
    int good = 0;
    int bad = 0;
    int failures = 0;
    double worst = 0; // largest |closed - exact|
    std::vector<std::string> messages;
};

inline VertexSet random_subset(const VertexSet& pool, std::mt19937_64& rng) {
    VertexSet s;
    for (VertexId v : pool)
        if (rng() & 1U) s.push_back(v);
    return s;
}

inline void record(Counts& c, int& counter, const char* what, const DropoutScm& scm, VertexId u, double closed,
                   double exact) {
    ++counter;
    const double err = std::abs(closed - exact);
    c.worst = std::max(c.worst, err);
    if (err > Tolerance::exact) {
        ++c.failures;
        c.messages.push_back(std::string(what) + " at " + scm.dag().name(u) + ": closed " + std::to_string(closed) +
                             " exact " + std::to_string(exact));
    }
}

// Runs every identity whose domain admits the drawn X on one model.
inline void check_model(const DropoutScm& scm, std::mt19937_64& rng, Counts& c) {
    const auto& dsd = scm.dsd();
    const auto& g = scm.dag();
    const auto hp = classify_hidden(dsd);
    const auto proxies = dsd.proxies();
    for (VertexId u : dsd.hidden()) {
        VertexSet single_children;
        for (VertexId v : g.children(u))
            if (dsd.role(v) == VertexRole::Proxy && g.parents(v).size() == 1) single_children.push_back(v);
        std::vector<VertexSet> draws{random_subset(proxies, rng), random_subset(proxies, rng),
                                     random_subset(single_children, rng), single_children};
        for (const auto& x : draws) {
            try {
                const double closed = closed_form_redundancy(scm, u, x);
                record(c, c.redundancy, "redundancy", scm, u, closed, redundancy(scm, u, x));
            } catch (const CapExceeded&) {
                throw;
            } catch (const InputError&) {
            }
            const VertexId m = *dsd.mechanism_of(u);
            if (set_contains(hp.good, u)) {
                try {
                    const double closed = closed_form_sensitivity_good(scm, u, x);
                    record(c, c.good, "good", scm, u, closed, context_sensitivity(scm, m, x));
                } catch (const CapExceeded&) {
                    throw;
                } catch (const InputError&) {
                }
            } else {
                try {
                    const double closed = closed_form_sensitivity_bad(scm, u, x);
                    record(c, c.bad, "bad", scm, u, closed, context_sensitivity(scm, m, x));
                } catch (const CapExceeded&) {
                    throw;
                } catch (const InputError&) {
                }
            }
        }
    }
}

} // namespace closed_form_suite
