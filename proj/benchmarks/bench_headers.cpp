#include <benchmark/benchmark.h>

#include "corpus.hpp"
#include "tablekb/headers.hpp"

namespace {

using namespace tablekb;

void BM_DetectHeadersCorpus(benchmark::State& state) {
    const auto& tables = bench::classification_corpus().tables;
    for (auto _ : state)
        for (const auto& t : tables) benchmark::DoNotOptimize(detect_headers(t, HeaderConfig{}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tables.size()));
}
BENCHMARK(BM_DetectHeadersCorpus)->Unit(benchmark::kMicrosecond);

}  // namespace
