#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexirag/http.hpp"

namespace lexirag {

inline constexpr std::string_view kMockModelId = "mock-trigram";
inline constexpr std::uint64_t kMockHashSeed = 0x5EED;

/// A dense embedding tagged with the model that produced it. Two vectors are
/// only comparable when dim and model_id agree.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  EmbeddingVector(std::vector<double> values, std::string model_id);

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  const std::string& model_id() const { return model_id_; }
  double Norm() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
  std::string model_id_;
};

enum class EmbedderBackend { kHttp, kMock };

struct EmbedderConfig {
  EmbedderBackend backend = EmbedderBackend::kMock;
  std::string endpoint_url;
  std::string api_key;
  std::string model_id{kMockModelId};
  std::size_t dim = 256;
  std::chrono::milliseconds timeout{30000};
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  RetryPolicy retry{3, std::chrono::milliseconds(200), 2.0};

  void Validate() const;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// Output is index-aligned with `texts`. Empty texts are rejected.
  virtual std::vector<EmbeddingVector> Embed(std::span<const std::string> texts) = 0;
  virtual const std::string& model_id() const = 0;
  virtual std::size_t dim() const = 0;

  EmbeddingVector EmbedOne(const std::string& text);
};

// Character-trigram feature hashing; see MockEmbed.
class MockEmbedder final : public Embedder {
 public:
  MockEmbedder(std::size_t dim, std::string model_id = std::string(kMockModelId));

  std::vector<EmbeddingVector> Embed(std::span<const std::string> texts) override;
  const std::string& model_id() const override { return model_id_; }
  std::size_t dim() const override { return dim_; }

 private:
  std::size_t dim_;
  std::string model_id_;
};

/// Speaks POST {"model", "input": [...]} -> {"data": [{"index", "embedding"}]}.
/// Requests are split into batch_size slices and up to max_in_flight slices are
/// sent concurrently; transport failures are retried per cfg.retry.
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(EmbedderConfig cfg, std::shared_ptr<HttpTransport> transport,
               Sleeper sleep = DefaultSleep);

  std::vector<EmbeddingVector> Embed(std::span<const std::string> texts) override;
  const std::string& model_id() const override { return cfg_.model_id; }
  std::size_t dim() const override { return cfg_.dim; }

 private:
  std::vector<EmbeddingVector> EmbedBatch(std::span<const std::string> batch);

  EmbedderConfig cfg_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleep_;
};

/// Builds the backend named by cfg. A null transport means the default
/// network client.
std::unique_ptr<Embedder> MakeEmbedder(const EmbedderConfig& cfg,
                                       std::shared_ptr<HttpTransport> transport = nullptr);

std::vector<EmbeddingVector> EmbedTexts(std::span<const std::string> texts,
                                        const EmbedderConfig& cfg);

/// Deterministic test embedding: NFC-normalize, take every window of three
/// scalar values (the whole text when shorter), hash each window's UTF-8 bytes
/// with FNV-1a 64 whose offset basis is xored with kMockHashSeed, add 1 to
/// bucket hash % dim, then L2-normalize. Requires dim >= 8.
EmbeddingVector MockEmbed(std::string_view text, std::size_t dim,
                          std::string model_id = std::string(kMockModelId));

/// u.v / (|u| |v|), clamped to [-1, 1]. Throws on dim or model mismatch and on
/// zero-norm input.
double CosineSimilarity(const EmbeddingVector& u, const EmbeddingVector& v);

}  // namespace lexirag
