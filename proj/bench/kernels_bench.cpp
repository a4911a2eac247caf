#include "per/bench.hpp"
#include "per/bootstrap.hpp"
#include "per/dropout_scm.hpp"
#include "per/random_models.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

using namespace per;

namespace {

const DropoutScm& model() {
    static const DropoutScm scm = separable_example_scm();
    return scm;
}

std::vector<VertexId> all_vertices() {
    std::vector<VertexId> v(model().size());
    std::iota(v.begin(), v.end(), 0);
    return v;
}

const Dataset& graph_data() {
    static const Dataset ds = generate_synthetic(SyntheticConfig{}, {1, 1}, 50000, 1);
    return ds;
}

const std::vector<std::string> kProxies{"V_G", "V_B", "V_A1", "V_A2"};

void BM_enumerate_joint(benchmark::State& s) {
    const auto vars = all_vertices();
    for (auto _ : s) benchmark::DoNotOptimize(enumerate_joint(model(), vars));
}

void BM_enumerate_joint_serial(benchmark::State& s) {
    const auto vars = all_vertices();
    for (auto _ : s) benchmark::DoNotOptimize(enumerate_joint_serial(model(), vars));
}

void BM_sample(benchmark::State& s) {
    for (auto _ : s) benchmark::DoNotOptimize(sample(model(), static_cast<std::size_t>(s.range(0)), 7));
    s.SetItemsProcessed(s.iterations() * s.range(0));
}

void BM_sample_serial(benchmark::State& s) {
    for (auto _ : s) benchmark::DoNotOptimize(sample_serial(model(), static_cast<std::size_t>(s.range(0)), 7));
    s.SetItemsProcessed(s.iterations() * s.range(0));
}

void BM_dependence_graph(benchmark::State& s) {
    for (auto _ : s) benchmark::DoNotOptimize(dependence_graph_statistical(graph_data(), "Y", kProxies));
}

void BM_dependence_graph_serial(benchmark::State& s) {
    for (auto _ : s) benchmark::DoNotOptimize(dependence_graph_statistical_serial(graph_data(), "Y", kProxies));
}

} // namespace

BENCHMARK(BM_enumerate_joint)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_enumerate_joint_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sample)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sample_serial)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dependence_graph)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dependence_graph_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
