#pragma once

#include <cstdint>

namespace per {

// Global cap on worker threads; 0 leaves the OpenMP default in place.
void set_thread_cap(int threads);
int thread_cap();
// Threads a parallel region will use under the current cap.
int worker_count();

// SplitMix64 finaliser applied to (seed, stream); used to derive independent
// per-block and per-repetition RNG seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

} // namespace per
