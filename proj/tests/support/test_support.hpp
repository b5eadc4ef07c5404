#pragma once

#include <stdlib.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexirag/embedding.hpp"
#include "lexirag/http.hpp"
#include "lexirag/rag_pipeline.hpp"
#include "lexirag/vector_store.hpp"

namespace lexirag::testing {

inline std::filesystem::path DataPath(const std::string& name) {
  return std::filesystem::path(LEXIRAG_TEST_DATA_DIR) / name;
}

inline nlohmann::json LoadJson(const std::string& name) {
  std::ifstream in(DataPath(name));
  return nlohmann::json::parse(in);
}

inline std::string ReadAll(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void WriteAll(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "lexirag-test-XXXXXX").string();
    path_ = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Records every request and answers through `handler`.
class RecordingTransport : public HttpTransport {
 public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;
  explicit RecordingTransport(Handler handler) : handler_(std::move(handler)) {}

  HttpResponse Post(const HttpRequest& request) override {
    {
      std::lock_guard lock(mu_);
      requests_.push_back(request);
    }
    return handler_(request);
  }

  std::vector<HttpRequest> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }

 private:
  Handler handler_;
  mutable std::mutex mu_;
  std::vector<HttpRequest> requests_;
};

/// Embedding endpoint that answers with mock vectors.
inline HttpResponse MockEmbeddingReply(const HttpRequest& req, std::size_t dim) {
  const auto body = nlohmann::json::parse(req.body);
  nlohmann::json data = nlohmann::json::array();
  int index = 0;
  for (const auto& text : body.at("input")) {
    const auto v = MockEmbed(text.get<std::string>(), dim);
    data.push_back({{"index", index++},
                    {"embedding", std::vector<double>(v.values().begin(), v.values().end())}});
  }
  return {200, nlohmann::json{{"data", data}}.dump()};
}

inline HttpResponse ChatReply(const std::string& content) {
  return {200, nlohmann::json{{"choices", {{{"message", {{"content", content}}}}}}}.dump()};
}

/// Each reading advances by one millisecond.
inline SteadyClock TickingClock() {
  auto ticks = std::make_shared<std::atomic<long>>(0);
  return [ticks] {
    return std::chrono::steady_clock::time_point(std::chrono::milliseconds(++*ticks));
  };
}

inline EmbeddingVector Vec(std::vector<double> v, std::string model = std::string(kMockModelId)) {
  return EmbeddingVector(std::move(v), std::move(model));
}

inline StoreRecord Record(const std::string& id, EmbeddingVector e, const std::string& doc = "d") {
  return {id, doc, "text of " + id, std::move(e)};
}

inline std::vector<std::string> Ids(const std::vector<ScoredChunk>& chunks) {
  std::vector<std::string> ids;
  for (const auto& c : chunks) ids.push_back(c.record->chunk_id);
  return ids;
}

/// Store of mock-embedded texts with ids "c00", "c01", ...
inline VectorStore StoreOfTexts(const std::vector<std::string>& texts, std::size_t dim = 64) {
  VectorStore store;
  std::vector<StoreRecord> records;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "c%02zu", i);
    records.push_back({id, "doc", texts[i], MockEmbed(texts[i], dim)});
  }
  store.AddChunks(std::move(records));
  return store;
}

}  // namespace lexirag::testing
