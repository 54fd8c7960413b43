#include <icmt/bleu.hpp>
#include <icmt/bm25.hpp>
#include <icmt/corpus.hpp>
#include <icmt/embeddings.hpp>
#include <icmt/selection.hpp>

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

namespace {

// Zipf-ish synthetic vocabulary so postings lists have a realistic skew.
std::string random_sentence(std::mt19937_64& rng, std::size_t vocab)
{
    std::uniform_int_distribution<std::size_t> len(5, 30);
    std::geometric_distribution<std::size_t> word(4.0 / static_cast<double>(vocab));
    std::string s;
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) {
            s += ' ';
        }
        s += "w" + std::to_string(word(rng) % vocab);
    }
    return s;
}

icmt::CorpusBank make_bank(std::size_t n)
{
    std::mt19937_64 rng(42);
    std::vector<icmt::ParallelExample> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        icmt::ParallelExample ex;
        ex.doc_id = "d" + std::to_string(i / 100);
        ex.position = i % 100;
        ex.id = icmt::make_example_id(ex.doc_id, ex.position);
        ex.source = random_sentence(rng, 5000);
        ex.target = random_sentence(rng, 5000);
        rows.push_back(std::move(ex));
    }
    return icmt::CorpusBank(std::move(rows));
}

std::vector<std::string> make_queries(std::size_t n)
{
    std::mt19937_64 rng(7);
    std::vector<std::string> q(n);
    for (auto& s : q) {
        s = random_sentence(rng, 5000);
    }
    return q;
}

void BM_Bm25Build(benchmark::State& state)
{
    const auto bank = make_bank(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(icmt::build_bm25_index(bank));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Bm25Build)->Arg(1000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_Bm25TopK(benchmark::State& state)
{
    const auto bank = make_bank(static_cast<std::size_t>(state.range(0)));
    const auto index = icmt::build_bm25_index(bank);
    const auto queries = make_queries(64);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto tokens = icmt::Bm25Index::analyze(queries[i++ % queries.size()]);
        benchmark::DoNotOptimize(icmt::bm25_topk(index, tokens, 5));
    }
}
BENCHMARK(BM_Bm25TopK)->Arg(1000)->Arg(20000)->Arg(100000)->Unit(benchmark::kMicrosecond);

void BM_GreedyCoverage(benchmark::State& state)
{
    const auto bank = make_bank(static_cast<std::size_t>(state.range(0)));
    const auto index = icmt::build_bm25_index(bank);
    const auto queries = make_queries(64);
    const icmt::BudgetSpec budget{static_cast<std::size_t>(state.range(1))};
    std::size_t i = 0;
    for (auto _ : state) {
        icmt::CoverageUtility utility(index, queries[i++ % queries.size()]);
        benchmark::DoNotOptimize(icmt::select_greedy_budget(bank, utility, budget));
    }
}
BENCHMARK(BM_GreedyCoverage)
    ->Args({1000, 100})
    ->Args({20000, 100})
    ->Args({100000, 100})
    ->Args({20000, 400})
    ->Unit(benchmark::kMicrosecond);

void BM_NnTopK(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    constexpr std::size_t dim = 384;
    std::mt19937_64 rng(3);
    std::normal_distribution<float> g;
    std::vector<std::string> ids(n);
    std::vector<float> data(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        ids[i] = "e" + std::to_string(i);
    }
    for (auto& v : data) {
        v = g(rng);
    }
    const icmt::EmbeddingStore store(std::move(ids), dim, std::move(data));
    std::vector<float> query(dim);
    for (auto& v : query) {
        v = g(rng);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(icmt::nn_topk(store, query, 5));
    }
}
BENCHMARK(BM_NnTopK)->Arg(1000)->Arg(20000)->Unit(benchmark::kMicrosecond);

void BM_CorpusBleu(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto hyps = make_queries(n);
    std::mt19937_64 rng(11);
    std::vector<std::string> refs(n);
    for (auto& r : refs) {
        r = random_sentence(rng, 200);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(icmt::corpus_bleu(hyps, refs));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CorpusBleu)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
