// Throughput benchmarks for the two candidate generators on a synthetic KB.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "mednorm/dense_index.hpp"
#include "mednorm/kb.hpp"
#include "mednorm/reranker.hpp"
#include "mednorm/sparse_index.hpp"

namespace {

using namespace mednorm;

KnowledgeBase synthetic_kb(std::size_t n_concepts) {
    static const std::vector<std::string> stems = {
        "cardio", "nephro", "hepato", "gastro", "neuro", "dermato",
        "hemato", "pulmo",  "osteo",  "arthro", "cysto", "entero"};
    static const std::vector<std::string> tails = {
        "pathy", "itis", "osis", "ectomy", "plasty", "gram", "scopy", "lysis"};
    KnowledgeBase kb;
    kb.name = "bench";
    SplitMix64 rng(1);
    for (std::size_t i = 0; i < n_concepts; ++i) {
        Concept c;
        c.concept_id = "C" + std::to_string(100000 + i);
        c.canonical_name = stems[rng.next() % stems.size()] +
                           tails[rng.next() % tails.size()] + " " +
                           std::to_string(i);
        c.aliases = {{c.canonical_name, "en"},
                     {stems[rng.next() % stems.size()] + " variant " +
                          std::to_string(i),
                      "en"}};
        c.semantic_types = {"T047"};
        kb.concepts[c.concept_id] = c;
    }
    return kb;
}

std::vector<std::string> synthetic_queries(std::size_t n) {
    KnowledgeBase kb = synthetic_kb(64);
    std::vector<std::string> out;
    SplitMix64 rng(2);
    std::vector<std::string> names;
    for (const auto& [id, c] : kb.concepts) names.push_back(c.canonical_name);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(names[rng.next() % names.size()]);
    return out;
}

void BM_sparse_query(benchmark::State& state) {
    KnowledgeBase kb = synthetic_kb(static_cast<std::size_t>(state.range(0)));
    SparseIndex index = build_sparse_index(kb);
    std::vector<std::string> queries = synthetic_queries(32);
    for (auto _ : state)
        benchmark::DoNotOptimize(query_sparse(index, queries, 64));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(queries.size()));
}

void BM_dense_query(benchmark::State& state) {
    KnowledgeBase kb = synthetic_kb(static_cast<std::size_t>(state.range(0)));
    HashNgramProvider provider(256, 3);
    DenseIndex index = build_dense_index(kb, provider);
    std::vector<std::string> queries = synthetic_queries(32);
    for (auto _ : state)
        benchmark::DoNotOptimize(query_dense(index, provider, queries, 64));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(queries.size()));
}

void BM_sparse_build(benchmark::State& state) {
    KnowledgeBase kb = synthetic_kb(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(build_sparse_index(kb));
}

}  // namespace

BENCHMARK(BM_sparse_query)->Arg(100)->Arg(1000)->Arg(5000);
BENCHMARK(BM_dense_query)->Arg(100)->Arg(1000)->Arg(5000);
BENCHMARK(BM_sparse_build)->Arg(1000);

BENCHMARK_MAIN();
