#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "lexirag/corpus_ingest.hpp"
#include "lexirag/embedding.hpp"
#include "lexirag/vector_store.hpp"

namespace {

using namespace lexirag;

std::string SampleText(std::size_t words) {
  static const std::vector<std::string> vocab{
      "gazette", "police", "section", "ministry", "ট্যুরিস্ট", "পুলিশ", "গঠিত", "সালে", "আইন", "ধারা"};
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string s;
  for (std::size_t i = 0; i < words; ++i) {
    s += vocab[pick(rng)];
    s += (i % 12 == 11) ? "। " : (i % 40 == 39 ? "\n\n" : " ");
  }
  return s;
}

VectorStore RandomStore(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  std::vector<StoreRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = g(rng);
    records.push_back({"c" + std::to_string(i), "d", "t", EmbeddingVector(v, "m")});
  }
  VectorStore store;
  store.AddChunks(std::move(records));
  return store;
}

EmbeddingVector RandomQuery(std::size_t dim) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<double> v(dim);
  for (auto& x : v) x = g(rng);
  return EmbeddingVector(v, "m");
}

void BM_SplitText(benchmark::State& state) {
  const auto text = SampleText(static_cast<std::size_t>(state.range(0)));
  const ChunkConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(SplitText(text, cfg));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_SplitText)->Arg(1000)->Arg(20000);

void BM_MockEmbed(benchmark::State& state) {
  const auto text = SampleText(200);
  for (auto _ : state) benchmark::DoNotOptimize(MockEmbed(text, 256));
}
BENCHMARK(BM_MockEmbed);

void BM_TopK(benchmark::State& state) {
  const auto store = RandomStore(static_cast<std::size_t>(state.range(0)), 256);
  const auto q = RandomQuery(256);
  for (auto _ : state) benchmark::DoNotOptimize(store.TopKBySimilarity(q, 4));
}
BENCHMARK(BM_TopK)->Arg(500)->Arg(5000);

void BM_MmrSelect(benchmark::State& state) {
  const auto store = RandomStore(static_cast<std::size_t>(state.range(0)), 256);
  const auto q = RandomQuery(256);
  const auto cfg = RetrievalConfig::ForTopK(4);
  for (auto _ : state) benchmark::DoNotOptimize(store.MmrSelect(q, cfg));
}
BENCHMARK(BM_MmrSelect)->Arg(500)->Arg(5000);

}  // namespace

BENCHMARK_MAIN();
