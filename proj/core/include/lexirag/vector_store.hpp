#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <string>
#include <unordered_set>
#include <vector>

#include "lexirag/embedding.hpp"

namespace lexirag {

inline constexpr int kStoreFormatVersion = 1;

struct StoreRecord {
  std::string chunk_id;
  std::string doc_id;
  std::string text;
  EmbeddingVector embedding;

  friend bool operator==(const StoreRecord&, const StoreRecord&) = default;
};

enum class RetrievalStrategy { kSimilarity, kMmr };

struct RetrievalConfig {
  std::size_t top_k = 4;
  std::size_t fetch_k = 20;
  double mmr_lambda = 0.5;
  RetrievalStrategy strategy = RetrievalStrategy::kMmr;

  /// top_k with fetch_k = max(4 * top_k, 20).
  static RetrievalConfig ForTopK(std::size_t top_k);
  void Validate() const;
};

struct ScoredChunk {
  std::shared_ptr<const StoreRecord> record;
  double score = 0.0;  // cosine similarity to the query
};

/// In-memory exact-scan vector index. Readers may run concurrently; writers
/// take the lock exclusively. Records are immutable once added, so returned
/// ScoredChunks stay valid after later writes.
class VectorStore {
 public:
  VectorStore() = default;
  /// Pins dim and model_id up front instead of taking them from the first add.
  VectorStore(std::size_t dim, std::string model_id);

  VectorStore(VectorStore&& other) noexcept;
  VectorStore& operator=(VectorStore&& other) noexcept;
  VectorStore(const VectorStore&) = delete;
  VectorStore& operator=(const VectorStore&) = delete;

  /// All-or-nothing: on any duplicate id or dim/model mismatch nothing is added.
  std::size_t AddChunks(std::vector<StoreRecord> records);

  /// Exact scan. Descending score, ties by ascending chunk_id; returns
  /// min(k, size()) items.
  std::vector<ScoredChunk> TopKBySimilarity(const EmbeddingVector& query, std::size_t k) const;

  /// Maximal marginal relevance over the fetch_k most similar records. The
  /// first pick is the most query-similar candidate; each further pick
  /// maximizes lambda * sim(q, d) - (1 - lambda) * max_{s selected} sim(d, s),
  /// ties by ascending chunk_id. Scores reported are sim(q, d).
  std::vector<ScoredChunk> MmrSelect(const EmbeddingVector& query, const RetrievalConfig& cfg) const;

  /// Dispatches on cfg.strategy.
  std::vector<ScoredChunk> Retrieve(const EmbeddingVector& query, const RetrievalConfig& cfg) const;

  void Persist(const std::filesystem::path& path) const;
  static VectorStore Load(const std::filesystem::path& path);

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  std::size_t dim() const;
  std::string model_id() const;
  bool Contains(const std::string& chunk_id) const;
  std::vector<std::shared_ptr<const StoreRecord>> Records() const;

 private:
  void CheckQuery(const EmbeddingVector& query) const;
  std::vector<ScoredChunk> TopKLocked(const EmbeddingVector& query, std::size_t k) const;

  mutable std::shared_mutex mu_;
  std::vector<std::shared_ptr<const StoreRecord>> records_;
  std::unordered_set<std::string> ids_;
  std::size_t dim_ = 0;
  std::string model_id_;
};

/// Orders by descending score, then ascending chunk_id.
bool RanksBefore(const ScoredChunk& a, const ScoredChunk& b);

}  // namespace lexirag
