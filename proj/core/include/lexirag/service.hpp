#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexirag/config.hpp"
#include "lexirag/corpus_ingest.hpp"
#include "lexirag/rag_pipeline.hpp"

namespace lexirag {

inline constexpr std::string_view kVersion = "0.1.0";

struct QueryRequest {
  std::string corpus_id;
  std::string question;
  PipelineMode pipeline = PipelineMode::kAdvanced;
  nlohmann::json overrides;  // null when absent
};

struct ChunkView {
  std::string chunk_id;
  std::string doc_id;
  std::string text;
  double score = 0.0;
  friend bool operator==(const ChunkView&, const ChunkView&) = default;
};

struct TraceRow {
  int iteration = 0;
  std::string query_used;
  std::optional<std::string> verdict;  // absent in vanilla mode
  std::optional<std::string> refined_query;
  bool parse_failed = false;
  std::vector<std::string> chunk_ids;
  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

struct QueryResponse {
  std::string answer;
  std::vector<ChunkView> chunks;
  std::vector<TraceRow> trace;
  bool refinement_exhausted = false;
  std::map<std::string, double> timings_ms;
  friend bool operator==(const QueryResponse&, const QueryResponse&) = default;
};

QueryResponse ToQueryResponse(const RagResult& result);
std::vector<TraceRow> ToTraceRows(const std::vector<IterationTrace>& trace);
nlohmann::json ToJson(const QueryResponse& response);
nlohmann::json ToJson(const std::vector<TraceRow>& trace);
QueryResponse QueryResponseFromJson(const nlohmann::json& doc);

/// A 4xx condition with optional per-field messages.
class RequestError : public Error {
 public:
  RequestError(int status, const std::string& message,
               std::map<std::string, std::string> fields = {})
      : Error(ErrorCode::kInvalidArgument, message), status_(status), fields_(std::move(fields)) {}

  int status() const { return status_; }
  const std::map<std::string, std::string>& fields() const { return fields_; }

 private:
  int status_;
  std::map<std::string, std::string> fields_;
};

/// Validates and decodes a /v1/query body; throws RequestError(400).
QueryRequest ParseQueryRequest(const nlohmann::json& body);

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

/// Transport-independent request handling. Corpora live in memory and, when a
/// data directory is set, are written back after every change and loaded at
/// construction.
class Service {
 public:
  Service(AppConfig cfg, BackendSet backends, std::filesystem::path data_dir = {},
          SteadyClock clock = std::chrono::steady_clock::now);

  /// Routes one request; never throws.
  HttpReply Dispatch(std::string_view method, std::string_view path, const std::string& body);

  /// Throws RequestError for 4xx conditions and PipelineError for backend
  /// failures.
  QueryResponse HandleQuery(const QueryRequest& request);

  std::shared_ptr<Corpus> CreateCorpus(const std::string& id);
  std::shared_ptr<Corpus> FindCorpus(const std::string& id) const;
  std::vector<std::string> CorpusIds() const;

  const AppConfig& config() const { return cfg_; }

 private:
  HttpReply PostCorpus(const std::string& body);
  HttpReply PostDocument(const std::string& corpus_id, const std::string& body);
  HttpReply PostQuery(const std::string& body);
  HttpReply ListCorpora() const;
  void Persist(const Corpus& corpus) const;

  AppConfig cfg_;
  BackendSet backends_;
  PromptTemplates templates_;
  std::filesystem::path data_dir_;
  SteadyClock clock_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Corpus>> corpora_;
};

bool IsValidCorpusId(std::string_view id);

/// Opens every corpus directory under `data_dir`.
std::map<std::string, std::shared_ptr<Corpus>> LoadCorpora(const std::filesystem::path& data_dir);

/// Blocking HTTP front end for a Service, backed by a thread pool of
/// `max_concurrent_requests` workers.
class HttpServer {
 public:
  HttpServer(Service& service, std::size_t threads);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Returns the bound port; port 0 picks a free one.
  int Bind(const std::string& host, int port);
  void Listen();  // blocks until Stop()
  void Stop();
  bool IsRunning() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lexirag
