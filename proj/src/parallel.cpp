#include "per/parallel.hpp"

#include <omp.h>

#include <atomic>

namespace per {

namespace {
std::atomic<int> g_cap{0};
}

void set_thread_cap(int threads) {
    g_cap = threads < 0 ? 0 : threads;
    if (g_cap > 0) omp_set_num_threads(g_cap);
}

int thread_cap() { return g_cap; }

int worker_count() {
    const int max = omp_get_max_threads();
    return g_cap > 0 && g_cap < max ? g_cap.load() : max;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace per
