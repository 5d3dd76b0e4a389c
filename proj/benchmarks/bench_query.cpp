#include <benchmark/benchmark.h>

#include "corpus.hpp"
#include "tablekb/bgp.hpp"

namespace {

using namespace tablekb;

// Columns titled "f1", case-insensitively, with their tables.
constexpr const char* kTitleQuery = R"(select ?t ?c where {
  ?t :hasCol ?c .
  ?c :hasTitle ?l .
  filter(strieq(?l, "f1"))
})";

// Numeric cells of typed columns: a four-pattern join.
constexpr const char* kJoinQuery = R"(select ?cell ?type where {
  ?c a ?type .
  ?cell :inColumn ?c .
  ?cell rdf:value ?v .
  ?cell :inRow ?r .
  filter(datatype(?v) = xsd:decimal)
})";

void BM_ParseQuery(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(parse_query(kJoinQuery));
}
BENCHMARK(BM_ParseQuery);

void BM_MatchTitle(benchmark::State& state) {
    const auto& store = bench::classification_corpus().store;
    const BgpQuery q = parse_query(kTitleQuery);
    std::size_t rows = 0;
    for (auto _ : state) rows = match_bgp(store, q).size();
    state.counters["rows"] = static_cast<double>(rows);
}
BENCHMARK(BM_MatchTitle)->Unit(benchmark::kMicrosecond);

void BM_MatchJoin(benchmark::State& state) {
    const auto& store = bench::classification_corpus().store;
    const BgpQuery q = parse_query(kJoinQuery);
    std::size_t rows = 0;
    for (auto _ : state) rows = match_bgp(store, q).size();
    state.counters["rows"] = static_cast<double>(rows);
}
BENCHMARK(BM_MatchJoin)->Unit(benchmark::kMillisecond);

}  // namespace
