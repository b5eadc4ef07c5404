#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "lexirag/error.hpp"
#include "lexirag/vector_store.hpp"
#include "mmr_oracle.hpp"
#include "test_support.hpp"

namespace lexirag {
namespace {

using testing::Ids;
using testing::Record;
using testing::Vec;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(VectorStore, AddThreeRecords) {
  VectorStore store;
  EXPECT_EQ(store.AddChunks({Record("a", Vec({1, 0})), Record("b", Vec({0, 1})),
                             Record("c", Vec({1, 1}))}),
            3u);
  EXPECT_EQ(store.size(), 3u);
  EXPECT_EQ(store.dim(), 2u);
  EXPECT_TRUE(store.Contains("b"));
}

TEST(VectorStore, BatchWithExistingIdChangesNothing) {
  VectorStore store;
  store.AddChunks({Record("a", Vec({1, 0}))});
  EXPECT_EQ(CodeOf([&] { store.AddChunks({Record("b", Vec({0, 1})), Record("a", Vec({1, 1}))}); }),
            ErrorCode::kAlreadyExists);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_FALSE(store.Contains("b"));
  EXPECT_EQ(CodeOf([&] { store.AddChunks({Record("x", Vec({0, 1})), Record("x", Vec({1, 1}))}); }),
            ErrorCode::kAlreadyExists);
  EXPECT_EQ(store.size(), 1u);
}

TEST(VectorStore, DimensionAndModelMismatch) {
  VectorStore store(256, std::string(kMockModelId));
  EXPECT_EQ(CodeOf([&] { store.AddChunks({Record("a", Vec(std::vector<double>(128, 1.0)))}); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(CodeOf([&] {
              store.AddChunks({Record("a", Vec(std::vector<double>(256, 1.0), "other"))});
            }),
            ErrorCode::kModelMismatch);
  EXPECT_TRUE(store.empty());
  store.AddChunks({Record("a", Vec(std::vector<double>(256, 1.0)))});
  EXPECT_EQ(CodeOf([&] { store.TopKBySimilarity(Vec({1, 2}), 1); }),
            ErrorCode::kDimensionMismatch);
}

TEST(VectorStore, TopKEdgeCases) {
  VectorStore store;
  store.AddChunks({Record("only", Vec({1, 2}))});
  EXPECT_TRUE(store.TopKBySimilarity(Vec({1, 0}), 0).empty());
  EXPECT_EQ(Ids(store.TopKBySimilarity(Vec({1, 0}), 5)), std::vector<std::string>{"only"});
  EXPECT_TRUE(VectorStore().TopKBySimilarity(Vec({1, 0}), 3).empty());
}

TEST(VectorStore, HandBuiltOrderingMatchesFullSort) {
  // sims to q=(1,0,0): d=1, b=0.8, a=0.6 (tie with c, c loses on id), c=0.6
  const std::vector<testing::OracleItem> items{
      {"c", {0.6, 0.8, 0}}, {"a", {0.6, 0, 0.8}}, {"d", {2, 0, 0}}, {"b", {0.8, 0.6, 0}}};
  const auto store = testing::StoreOf(items);
  const std::vector<double> q{1, 0, 0};
  const auto got = store.TopKBySimilarity(EmbeddingVector(q, "m"), 4);
  EXPECT_EQ(Ids(got), (std::vector<std::string>{"d", "b", "a", "c"}));
  EXPECT_EQ(Ids(got), testing::OracleTopK(items, q, 4));
  EXPECT_NEAR(got[1].score, 0.8, 1e-12);
}

TEST(VectorStore, TopKPrefixContainment) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = testing::RandomMmrInstance(rng);
    const auto store = testing::StoreOf(inst.items);
    const EmbeddingVector q(inst.query, "m");
    const auto all = Ids(store.TopKBySimilarity(q, inst.items.size()));
    for (std::size_t k = 0; k <= inst.items.size(); ++k) {
      const auto top = Ids(store.TopKBySimilarity(q, k));
      ASSERT_EQ(top, std::vector<std::string>(all.begin(), all.begin() + k));
    }
  }
}

TEST(Mmr, LambdaOneEqualsSimilarityRanking) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testing::RandomMmrInstance(rng);
    const auto store = testing::StoreOf(inst.items);
    const EmbeddingVector q(inst.query, "m");
    RetrievalConfig cfg{inst.top_k, inst.fetch_k, 1.0, RetrievalStrategy::kMmr};
    EXPECT_EQ(Ids(store.MmrSelect(q, cfg)), Ids(store.TopKBySimilarity(q, inst.top_k)));
  }
}

TEST(Mmr, TopOneIsMostSimilarForAnyLambda) {
  const std::vector<testing::OracleItem> items{{"a", {1, 0}}, {"b", {0.9, 0.1}}, {"c", {0, 1}}};
  const auto store = testing::StoreOf(items);
  for (double lambda : {0.0, 0.3, 0.5, 0.7, 1.0}) {
    RetrievalConfig cfg{1, 20, lambda, RetrievalStrategy::kMmr};
    EXPECT_EQ(Ids(store.MmrSelect(EmbeddingVector({1, 0.05}, "m"), cfg)),
              std::vector<std::string>{"a"});
  }
}

TEST(Mmr, NearDuplicatesAreSpreadOut) {
  // a and a2 are near copies; c is less relevant but different.
  const std::vector<testing::OracleItem> items{
      {"a", {1, 0.1, 0}}, {"a2", {1, 0.11, 0}}, {"c", {0.5, 0, 0.8}}, {"d", {0, 1, 0}}};
  const std::vector<double> q{1, 0, 0.2};
  const auto store = testing::StoreOf(items);
  RetrievalConfig cfg{2, 20, 0.5, RetrievalStrategy::kMmr};
  const auto got = Ids(store.MmrSelect(EmbeddingVector(q, "m"), cfg));
  EXPECT_EQ(got, testing::OracleMmr(items, q, 2, 20, 0.5));
  EXPECT_EQ(got, (std::vector<std::string>{"a", "c"}));
  // Relevance alone keeps the duplicate.
  cfg.mmr_lambda = 1.0;
  EXPECT_EQ(Ids(store.MmrSelect(EmbeddingVector(q, "m"), cfg)),
            (std::vector<std::string>{"a", "a2"}));
}

TEST(Mmr, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = testing::RandomMmrInstance(rng);
    const auto store = testing::StoreOf(inst.items);
    RetrievalConfig cfg{inst.top_k, inst.fetch_k, inst.lambda, RetrievalStrategy::kMmr};
    ASSERT_EQ(Ids(store.MmrSelect(EmbeddingVector(inst.query, "m"), cfg)),
              testing::OracleMmr(inst.items, inst.query, inst.top_k, inst.fetch_k, inst.lambda))
        << "trial " << trial;
  }
}

TEST(Mmr, ScoresAreQuerySimilarities) {
  const std::vector<testing::OracleItem> items{{"a", {1, 0}}, {"b", {0, 1}}, {"c", {1, 1}}};
  const auto store = testing::StoreOf(items);
  const std::vector<double> q{2, 1};
  for (const auto& c : store.MmrSelect(EmbeddingVector(q, "m"), RetrievalConfig::ForTopK(3))) {
    const auto& it = *std::find_if(items.begin(), items.end(),
                                   [&](const auto& i) { return i.id == c.record->chunk_id; });
    EXPECT_DOUBLE_EQ(c.score, testing::OracleCos(it.v, q));
  }
}

TEST(RetrievalConfig, DefaultsAndValidation) {
  const auto cfg = RetrievalConfig::ForTopK(4);
  EXPECT_EQ(cfg.top_k, 4u);
  EXPECT_EQ(cfg.fetch_k, 20u);
  EXPECT_EQ(RetrievalConfig::ForTopK(8).fetch_k, 32u);
  EXPECT_DOUBLE_EQ(cfg.mmr_lambda, 0.5);
  EXPECT_THROW((RetrievalConfig{0, 20, 0.5}.Validate()), Error);
  EXPECT_THROW((RetrievalConfig{5, 4, 0.5}.Validate()), Error);
  EXPECT_THROW((RetrievalConfig{2, 4, 1.5}.Validate()), Error);
}

TEST(Persistence, RoundTripPreservesRetrieval) {
  testing::TempDir dir;
  std::vector<std::string> texts;
  for (int i = 0; i < 10; ++i) texts.push_back("record number " + std::to_string(i * 37) + " আইন");
  const auto store = testing::StoreOfTexts(texts);
  store.Persist(dir / "store.jsonl");
  const auto loaded = VectorStore::Load(dir / "store.jsonl");
  ASSERT_EQ(loaded.size(), store.size());
  EXPECT_EQ(loaded.model_id(), store.model_id());
  for (const std::string q : {"record", "number 74", "আইন", "zzz", "37 record"}) {
    const auto qv = MockEmbed(q, 64);
    const auto a = store.TopKBySimilarity(qv, 4);
    const auto b = loaded.TopKBySimilarity(qv, 4);
    ASSERT_EQ(Ids(a), Ids(b));
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].score, b[i].score);
      EXPECT_EQ(*a[i].record, *b[i].record);
    }
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "store.jsonl.tmp"));
}

TEST(Persistence, EmptyStoreRoundTrips) {
  testing::TempDir dir;
  VectorStore(32, "m").Persist(dir / "s.jsonl");
  const auto loaded = VectorStore::Load(dir / "s.jsonl");
  EXPECT_TRUE(loaded.empty());
  EXPECT_EQ(loaded.dim(), 32u);
}

TEST(Persistence, RejectsBadFiles) {
  testing::TempDir dir;
  const auto store = testing::StoreOfTexts({"alpha", "beta", "gamma"});
  const auto path = dir / "store.jsonl";
  store.Persist(path);
  const std::string good = testing::ReadAll(path);

  EXPECT_EQ(CodeOf([&] { VectorStore::Load(dir / "missing.jsonl"); }), ErrorCode::kNotFound);

  auto header = nlohmann::json::parse(good.substr(0, good.find('\n')));
  header["format_version"] = 99;
  testing::WriteAll(path, header.dump() + good.substr(good.find('\n')));
  EXPECT_EQ(CodeOf([&] { VectorStore::Load(path); }), ErrorCode::kVersionMismatch);

  testing::WriteAll(path, good.substr(0, good.size() - 40));
  EXPECT_EQ(CodeOf([&] { VectorStore::Load(path); }), ErrorCode::kCorruptFile);

  std::string flipped = good;
  flipped[good.find("beta")] = 'B';
  testing::WriteAll(path, flipped);
  EXPECT_EQ(CodeOf([&] { VectorStore::Load(path); }), ErrorCode::kCorruptFile);

  testing::WriteAll(path, "not json\n");
  EXPECT_EQ(CodeOf([&] { VectorStore::Load(path); }), ErrorCode::kCorruptFile);
}

TEST(VectorStore, ConcurrentReadersDuringWrites) {
  VectorStore store;
  store.AddChunks({Record("seed", MockEmbed("seed", 32))});
  std::atomic<int> reads{0};
  std::vector<std::thread> readers;
  for (int t = 0; t < 4; ++t) {
    readers.emplace_back([&] {
      const auto q = MockEmbed("query text", 32);
      for (int i = 0; i < 300; ++i) {
        const auto got = store.MmrSelect(q, RetrievalConfig::ForTopK(3));
        if (got.empty()) return;
        ++reads;
        std::this_thread::yield();
      }
    });
  }
  for (int i = 0; i < 200; ++i) {
    store.AddChunks({Record("r" + std::to_string(i), MockEmbed("text " + std::to_string(i), 32))});
  }
  for (auto& t : readers) t.join();
  EXPECT_EQ(store.size(), 201u);
  EXPECT_EQ(reads.load(), 4 * 300);
}

}  // namespace
}  // namespace lexirag
