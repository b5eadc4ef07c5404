#include "lexirag/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include <nlohmann/json.hpp>

#include "lexirag/error.hpp"
#include "lexirag/utf8.hpp"

namespace lexirag {

using nlohmann::json;

EmbeddingVector::EmbeddingVector(std::vector<double> values, std::string model_id)
    : values_(std::move(values)), model_id_(std::move(model_id)) {
  if (values_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "embedding must have dim > 0");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidArgument, "embedding contains a non-finite value");
    }
  }
}

double EmbeddingVector::Norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

void EmbedderConfig::Validate() const {
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "embedder dim must be > 0");
  if (batch_size == 0) throw Error(ErrorCode::kInvalidArgument, "embedder batch_size must be >= 1");
  if (max_in_flight == 0) throw Error(ErrorCode::kInvalidArgument, "embedder max_in_flight must be >= 1");
  if (model_id.empty()) throw Error(ErrorCode::kInvalidArgument, "embedder model_id is empty");
  if (backend == EmbedderBackend::kHttp && endpoint_url.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "http embedder needs an endpoint_url");
  }
  if (backend == EmbedderBackend::kMock && dim < 8) {
    throw Error(ErrorCode::kInvalidArgument, "mock embedder needs dim >= 8");
  }
}

EmbeddingVector Embedder::EmbedOne(const std::string& text) {
  auto out = Embed(std::span<const std::string>(&text, 1));
  return std::move(out.front());
}

namespace {

void RequireNonEmpty(std::span<const std::string> texts) {
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "cannot embed empty text at position " + std::to_string(i));
    }
  }
}

}  // namespace

EmbeddingVector MockEmbed(std::string_view text, std::size_t dim, std::string model_id) {
  if (text.empty()) throw Error(ErrorCode::kInvalidArgument, "cannot embed empty text");
  if (dim < 8) throw Error(ErrorCode::kInvalidArgument, "mock embedding needs dim >= 8");

  const std::u32string scalars = utf8::Decode(utf8::NormalizeNfc(text));
  const std::uint64_t basis = 0xcbf29ce484222325ULL ^ kMockHashSeed;
  std::vector<double> values(dim, 0.0);
  const std::size_t window = std::min<std::size_t>(3, scalars.size());
  for (std::size_t i = 0; i + window <= scalars.size(); ++i) {
    const std::string gram = utf8::Encode(std::u32string_view(scalars).substr(i, window));
    values[utf8::Fnv1a64(gram, basis) % dim] += 1.0;
  }
  double norm = 0.0;
  for (double v : values) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : values) v /= norm;
  return EmbeddingVector(std::move(values), std::move(model_id));
}

double CosineSimilarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cannot compare dim " + std::to_string(u.dim()) + " with dim " +
                    std::to_string(v.dim()));
  }
  if (u.model_id() != v.model_id()) {
    throw Error(ErrorCode::kModelMismatch,
                "cannot compare embeddings from '" + u.model_id() + "' and '" +
                    v.model_id() + "'");
  }
  const auto a = u.values();
  const auto b = v.values();
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::kZeroNorm, "cosine similarity of a zero-norm vector");
  }
  const double cos = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(cos, -1.0, 1.0);
}

MockEmbedder::MockEmbedder(std::size_t dim, std::string model_id)
    : dim_(dim), model_id_(std::move(model_id)) {
  if (dim_ < 8) throw Error(ErrorCode::kInvalidArgument, "mock embedder needs dim >= 8");
}

std::vector<EmbeddingVector> MockEmbedder::Embed(std::span<const std::string> texts) {
  RequireNonEmpty(texts);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(MockEmbed(t, dim_, model_id_));
  return out;
}

HttpEmbedder::HttpEmbedder(EmbedderConfig cfg, std::shared_ptr<HttpTransport> transport,
                           Sleeper sleep)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
  cfg_.Validate();
  if (!transport_) transport_ = MakeDefaultTransport();
}

std::vector<EmbeddingVector> HttpEmbedder::EmbedBatch(std::span<const std::string> batch) {
  HttpRequest req;
  req.url = cfg_.endpoint_url;
  req.timeout = cfg_.timeout;
  req.headers.emplace_back("Content-Type", "application/json");
  if (!cfg_.api_key.empty()) req.headers.emplace_back("Authorization", "Bearer " + cfg_.api_key);
  req.body = json{{"model", cfg_.model_id},
                  {"input", std::vector<std::string>(batch.begin(), batch.end())}}
                 .dump();

  const HttpResponse resp =
      WithRetries(cfg_.retry, sleep_, [&] { return transport_->Post(req); });
  if (resp.status < 200 || resp.status >= 300) {
    throw Error(ErrorCode::kBackend, "embedding endpoint returned HTTP " +
                                         std::to_string(resp.status) + ": " +
                                         resp.body.substr(0, 200));
  }

  std::vector<std::vector<double>> slots(batch.size());
  std::vector<bool> filled(batch.size(), false);
  try {
    const json doc = json::parse(resp.body);
    for (const auto& item : doc.at("data")) {
      const auto index = item.at("index").get<std::size_t>();
      if (index >= batch.size() || filled[index]) {
        throw Error(ErrorCode::kBackend,
                    "embedding response has bad or repeated index " + std::to_string(index));
      }
      slots[index] = item.at("embedding").get<std::vector<double>>();
      filled[index] = true;
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBackend, std::string("malformed embedding response: ") + e.what());
  }

  std::vector<EmbeddingVector> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!filled[i]) {
      throw Error(ErrorCode::kBackend,
                  "embedding response is missing index " + std::to_string(i));
    }
    if (slots[i].size() != cfg_.dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "embedding endpoint returned dim " + std::to_string(slots[i].size()) +
                      ", configured dim is " + std::to_string(cfg_.dim));
    }
    out.emplace_back(std::move(slots[i]), cfg_.model_id);
  }
  return out;
}

std::vector<EmbeddingVector> HttpEmbedder::Embed(std::span<const std::string> texts) {
  RequireNonEmpty(texts);
  std::vector<EmbeddingVector> out(texts.size());
  const std::size_t batches = (texts.size() + cfg_.batch_size - 1) / cfg_.batch_size;

  for (std::size_t wave = 0; wave < batches; wave += cfg_.max_in_flight) {
    const std::size_t wave_end = std::min(batches, wave + cfg_.max_in_flight);
    std::vector<std::future<std::vector<EmbeddingVector>>> pending;
    for (std::size_t b = wave; b < wave_end; ++b) {
      const std::size_t begin = b * cfg_.batch_size;
      const std::size_t count = std::min(cfg_.batch_size, texts.size() - begin);
      auto slice = texts.subspan(begin, count);
      // A lone batch runs on the calling thread.
      const auto policy = wave_end - wave == 1 ? std::launch::deferred : std::launch::async;
      pending.push_back(std::async(policy, [this, slice] { return EmbedBatch(slice); }));
    }
    // Drain every future before rethrowing so no task outlives this call.
    std::exception_ptr first_error;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      try {
        auto vecs = pending[k].get();
        const std::size_t begin = (wave + k) * cfg_.batch_size;
        for (std::size_t i = 0; i < vecs.size(); ++i) out[begin + i] = std::move(vecs[i]);
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
  }
  return out;
}

std::unique_ptr<Embedder> MakeEmbedder(const EmbedderConfig& cfg,
                                       std::shared_ptr<HttpTransport> transport) {
  cfg.Validate();
  if (cfg.backend == EmbedderBackend::kMock) {
    return std::make_unique<MockEmbedder>(cfg.dim, cfg.model_id);
  }
  return std::make_unique<HttpEmbedder>(cfg, std::move(transport));
}

std::vector<EmbeddingVector> EmbedTexts(std::span<const std::string> texts,
                                        const EmbedderConfig& cfg) {
  return MakeEmbedder(cfg)->Embed(texts);
}

}  // namespace lexirag
