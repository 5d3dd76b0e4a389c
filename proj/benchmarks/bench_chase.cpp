#include <benchmark/benchmark.h>

#include "corpus.hpp"
#include "tablekb/linker.hpp"
#include "tablekb/rules.hpp"

namespace {

using namespace tablekb;

const RuleSet& rules() {
    static const RuleSet r = load_rules(std::filesystem::path(TABLEKB_BENCH_DATA_DIR) / "rules.txt");
    return r;
}

// Full linking program over the first N tables of the corpus.
void BM_RestrictedChase(benchmark::State& state) {
    const FactStore store = bench::corpus_prefix(static_cast<std::size_t>(state.range(0)));
    const auto& papers = bench::classification_corpus().papers;
    std::size_t merges = 0;
    for (auto _ : state) {
        auto result = restricted_chase(rules(), store, papers);
        merges = result.stats.total_merges();
        benchmark::DoNotOptimize(result.stats.entity_count);
    }
    state.counters["facts"] = static_cast<double>(store.size());
    state.counters["merges"] = static_cast<double>(merges);
}
BENCHMARK(BM_RestrictedChase)->Arg(10)->Arg(40)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_BaseFacts(benchmark::State& state) {
    const auto& c = bench::classification_corpus();
    for (auto _ : state) benchmark::DoNotOptimize(fact_count(base_facts(c.store, c.papers)));
}
BENCHMARK(BM_BaseFacts)->Unit(benchmark::kMillisecond);

void BM_StrEq(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(str_eq("Straße Modell", "STRASSE MODELL"));
        benchmark::DoNotOptimize(str_eq("BERT-large", "bert-base"));
    }
}
BENCHMARK(BM_StrEq);

}  // namespace
