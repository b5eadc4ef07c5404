#include "lexirag/service.hpp"

#include <mutex>

#include "lexirag/error.hpp"
#include "lexirag/utf8.hpp"

namespace lexirag {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- wire schema -----------------------------------------------------------

std::vector<TraceRow> ToTraceRows(const std::vector<IterationTrace>& trace) {
  std::vector<TraceRow> rows;
  rows.reserve(trace.size());
  for (const auto& it : trace) {
    TraceRow row;
    row.iteration = it.iteration;
    row.query_used = it.query_used;
    if (it.verdict) {
      row.verdict = std::string(ToString(it.verdict->verdict));
      row.refined_query = it.verdict->refined_query;
      row.parse_failed = it.verdict->parse_failed;
    }
    for (const auto& c : it.retrieved) row.chunk_ids.push_back(c.record->chunk_id);
    rows.push_back(std::move(row));
  }
  return rows;
}

QueryResponse ToQueryResponse(const RagResult& result) {
  QueryResponse resp;
  resp.answer = result.answer;
  for (const auto& c : result.final_chunks) {
    resp.chunks.push_back({c.record->chunk_id, c.record->doc_id, c.record->text, c.score});
  }
  resp.trace = ToTraceRows(result.trace);
  resp.refinement_exhausted = result.refinement_exhausted;
  resp.timings_ms = result.timings_ms;
  return resp;
}

namespace {

json OptionalString(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> OptionalFrom(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<std::string>();
}

}  // namespace

json ToJson(const std::vector<TraceRow>& trace) {
  json rows = json::array();
  for (const auto& t : trace) {
    rows.push_back({{"iteration", t.iteration},
                    {"query_used", t.query_used},
                    {"verdict", OptionalString(t.verdict)},
                    {"refined_query", OptionalString(t.refined_query)},
                    {"parse_failed", t.parse_failed},
                    {"chunk_ids", t.chunk_ids}});
  }
  return rows;
}

json ToJson(const QueryResponse& r) {
  json chunks = json::array();
  for (const auto& c : r.chunks) {
    chunks.push_back(
        {{"chunk_id", c.chunk_id}, {"doc_id", c.doc_id}, {"text", c.text}, {"score", c.score}});
  }
  return {{"answer", r.answer},
          {"chunks", std::move(chunks)},
          {"trace", ToJson(r.trace)},
          {"refinement_exhausted", r.refinement_exhausted},
          {"timings_ms", r.timings_ms}};
}

QueryResponse QueryResponseFromJson(const json& doc) {
  try {
    QueryResponse r;
    r.answer = doc.at("answer").get<std::string>();
    for (const auto& c : doc.at("chunks")) {
      r.chunks.push_back({c.at("chunk_id").get<std::string>(), c.at("doc_id").get<std::string>(),
                          c.at("text").get<std::string>(), c.at("score").get<double>()});
    }
    for (const auto& t : doc.at("trace")) {
      r.trace.push_back({t.at("iteration").get<int>(), t.at("query_used").get<std::string>(),
                         OptionalFrom(t.at("verdict")), OptionalFrom(t.at("refined_query")),
                         t.at("parse_failed").get<bool>(),
                         t.at("chunk_ids").get<std::vector<std::string>>()});
    }
    r.refinement_exhausted = doc.at("refinement_exhausted").get<bool>();
    r.timings_ms = doc.at("timings_ms").get<std::map<std::string, double>>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed QueryResponse: ") + e.what());
  }
}

QueryRequest ParseQueryRequest(const json& body) {
  if (!body.is_object()) throw RequestError(400, "request body must be a JSON object");
  std::map<std::string, std::string> fields;
  for (const auto& [key, _] : body.items()) {
    if (key != "corpus_id" && key != "question" && key != "pipeline" && key != "overrides") {
      fields[key] = "unknown field";
    }
  }
  QueryRequest req;
  if (!body.contains("corpus_id") || !body["corpus_id"].is_string() ||
      body["corpus_id"].get<std::string>().empty()) {
    fields["corpus_id"] = "required non-empty string";
  } else {
    req.corpus_id = body["corpus_id"].get<std::string>();
  }

  if (!body.contains("question") || !body["question"].is_string() ||
      body["question"].get<std::string>().empty()) {
    fields["question"] = "required non-empty string";
  } else {
    req.question = body["question"].get<std::string>();
    if (!utf8::IsValid(req.question)) {
      fields["question"] = "must be valid UTF-8";
    } else if (utf8::Length(req.question) > kMaxQueryChars) {
      fields["question"] =
          "exceeds the limit of " + std::to_string(kMaxQueryChars) + " characters";
    }
  }

  if (body.contains("pipeline")) {
    const auto& p = body["pipeline"];
    if (p.is_string() && (p == "vanilla" || p == "advanced")) {
      req.pipeline = ParsePipelineMode(p.get<std::string>());
    } else {
      fields["pipeline"] = "must be \"vanilla\" or \"advanced\"";
    }
  }

  if (body.contains("overrides") && !body["overrides"].is_null()) {
    if (!body["overrides"].is_object()) {
      fields["overrides"] = "must be an object";
    } else {
      req.overrides = body["overrides"];
    }
  }
  if (!fields.empty()) throw RequestError(400, "invalid query request", std::move(fields));
  return req;
}

// ---- service ---------------------------------------------------------------

bool IsValidCorpusId(std::string_view id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

std::map<std::string, std::shared_ptr<Corpus>> LoadCorpora(const fs::path& data_dir) {
  std::map<std::string, std::shared_ptr<Corpus>> out;
  if (data_dir.empty() || !fs::is_directory(data_dir)) return out;
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    if (!entry.is_directory() || !fs::exists(entry.path() / "store.jsonl")) continue;
    const std::string id = entry.path().filename().string();
    if (!IsValidCorpusId(id)) continue;
    out[id] = Corpus::Open(entry.path(), id);
  }
  return out;
}

Service::Service(AppConfig cfg, BackendSet backends, fs::path data_dir, SteadyClock clock)
    : cfg_(std::move(cfg)),
      backends_(std::move(backends)),
      templates_(LoadTemplates(cfg_)),
      data_dir_(std::move(data_dir)),
      clock_(std::move(clock)),
      corpora_(LoadCorpora(data_dir_)) {}

std::shared_ptr<Corpus> Service::CreateCorpus(const std::string& id) {
  if (!IsValidCorpusId(id)) {
    throw RequestError(400, "invalid corpus name",
                       {{"name", "use 1-128 characters from [A-Za-z0-9._-], not starting with '.'"}});
  }
  std::unique_lock lock(mu_);
  if (corpora_.contains(id)) throw Error(ErrorCode::kAlreadyExists, "corpus '" + id + "' already exists");
  auto corpus = std::make_shared<Corpus>(id);
  corpora_[id] = corpus;
  lock.unlock();
  Persist(*corpus);
  return corpus;
}

std::shared_ptr<Corpus> Service::FindCorpus(const std::string& id) const {
  std::shared_lock lock(mu_);
  const auto it = corpora_.find(id);
  return it == corpora_.end() ? nullptr : it->second;
}

std::vector<std::string> Service::CorpusIds() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : corpora_) ids.push_back(id);
  return ids;
}

void Service::Persist(const Corpus& corpus) const {
  if (!data_dir_.empty()) corpus.Save(data_dir_ / corpus.id());
}

QueryResponse Service::HandleQuery(const QueryRequest& request) {
  const auto corpus = FindCorpus(request.corpus_id);
  if (!corpus) throw RequestError(404, "unknown corpus '" + request.corpus_id + "'");

  PipelineConfig cfg = cfg_.pipeline;
  try {
    if (!request.overrides.is_null()) ApplyPipelineOverrides(cfg, request.overrides);
    cfg.mode = request.pipeline;
    cfg.Validate();
  } catch (const Error& e) {
    throw RequestError(400, "invalid pipeline configuration", {{"overrides", e.what()}});
  }
  if (corpus->store().empty()) {
    throw RequestError(409, "corpus '" + request.corpus_id + "' has no documents");
  }

  const RagPipeline pipeline(corpus->store(), *backends_.embedder, *backends_.generator,
                             *backends_.checker, templates_, clock_);
  return ToQueryResponse(pipeline.Answer({request.question, request.corpus_id}, cfg));
}

namespace {

HttpReply JsonReply(int status, const json& body) { return {status, body.dump()}; }

HttpReply ErrorReply(int status, const std::string& message,
                     const std::map<std::string, std::string>& fields = {}) {
  json body{{"error", message}};
  if (!fields.empty()) body["fields"] = fields;
  return JsonReply(status, body);
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kAlreadyExists:
    case ErrorCode::kEmptyCorpus:
      return 409;
    case ErrorCode::kBackend:
    case ErrorCode::kTimeout:
    case ErrorCode::kNetwork:
    case ErrorCode::kScriptExhausted:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kModelMismatch:
      return 502;
    default:
      return 500;
  }
}

json ParseBody(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw RequestError(400, std::string("request body is not valid JSON: ") + e.what());
  }
}

}  // namespace

HttpReply Service::PostCorpus(const std::string& body) {
  const json doc = ParseBody(body);
  if (!doc.is_object() || !doc.contains("name") || !doc["name"].is_string()) {
    throw RequestError(400, "invalid corpus request", {{"name", "required string"}});
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "name") throw RequestError(400, "invalid corpus request", {{key, "unknown field"}});
  }
  const auto name = doc["name"].get<std::string>();
  CreateCorpus(name);
  return JsonReply(201, {{"id", name}, {"name", name}});
}

HttpReply Service::PostDocument(const std::string& corpus_id, const std::string& body) {
  const auto corpus = FindCorpus(corpus_id);
  if (!corpus) throw RequestError(404, "unknown corpus '" + corpus_id + "'");
  const json doc = ParseBody(body);
  if (!doc.is_object()) throw RequestError(400, "request body must be a JSON object");

  std::map<std::string, std::string> fields;
  for (const auto& [key, _] : doc.items()) {
    if (key != "doc_id" && key != "title" && key != "page_count" && key != "language_hint" &&
        key != "text") {
      fields[key] = "unknown field";
    }
  }
  DocumentMeta meta;
  std::string text;
  auto str = [&](const char* key, std::string& dst) {
    if (!doc.contains(key) || !doc[key].is_string()) {
      fields[key] = "required string";
    } else {
      dst = doc[key].get<std::string>();
    }
  };
  str("doc_id", meta.doc_id);
  str("title", meta.title);
  str("text", text);
  if (!doc.contains("page_count") || !doc["page_count"].is_number_integer() ||
      doc["page_count"].get<long long>() < 1) {
    fields["page_count"] = "required integer >= 1";
  } else {
    meta.page_count = doc["page_count"].get<int>();
  }
  if (!doc.contains("language_hint") || !doc["language_hint"].is_string()) {
    fields["language_hint"] = "required: bn, en or mixed";
  } else {
    try {
      meta.language_hint = ParseLanguageHint(doc["language_hint"].get<std::string>());
    } catch (const Error&) {
      fields["language_hint"] = "required: bn, en or mixed";
    }
  }
  if (meta.doc_id.empty() && !fields.contains("doc_id")) fields["doc_id"] = "must be non-empty";
  if (!fields.empty()) throw RequestError(400, "invalid document", std::move(fields));

  const auto report = corpus->IngestDocument(meta, text, cfg_.chunking, *backends_.embedder);
  Persist(*corpus);
  return JsonReply(201, {{"doc_id", meta.doc_id},
                         {"chunk_count", report.chunk_count},
                         {"chunk_ids", report.chunk_ids}});
}

HttpReply Service::PostQuery(const std::string& body) {
  const QueryRequest req = ParseQueryRequest(ParseBody(body));
  return JsonReply(200, ToJson(HandleQuery(req)));
}

HttpReply Service::ListCorpora() const {
  json list = json::array();
  std::shared_lock lock(mu_);
  for (const auto& [id, corpus] : corpora_) {
    list.push_back({{"id", id},
                    {"documents", corpus->Documents().size()},
                    {"chunks", corpus->store().size()}});
  }
  return JsonReply(200, {{"corpora", std::move(list)}});
}

HttpReply Service::Dispatch(std::string_view method, std::string_view path, const std::string& body) {
  constexpr std::string_view kCorporaPrefix = "/v1/corpora/";
  constexpr std::string_view kDocumentsSuffix = "/documents";
  try {
    if (path == "/v1/health") {
      if (method != "GET") return ErrorReply(405, "method not allowed");
      return JsonReply(200, {{"status", "ok"}, {"version", kVersion}});
    }
    if (path == "/v1/corpora") {
      if (method == "GET") return ListCorpora();
      if (method == "POST") return PostCorpus(body);
      return ErrorReply(405, "method not allowed");
    }
    if (path == "/v1/query") {
      if (method != "POST") return ErrorReply(405, "method not allowed");
      return PostQuery(body);
    }
    if (path.starts_with(kCorporaPrefix) && path.ends_with(kDocumentsSuffix) &&
        path.size() > kCorporaPrefix.size() + kDocumentsSuffix.size()) {
      if (method != "POST") return ErrorReply(405, "method not allowed");
      const auto id = path.substr(kCorporaPrefix.size(),
                                  path.size() - kCorporaPrefix.size() - kDocumentsSuffix.size());
      return PostDocument(std::string(id), body);
    }
    return ErrorReply(404, "no route for " + std::string(path));
  } catch (const RequestError& e) {
    return ErrorReply(e.status(), e.what(), e.fields());
  } catch (const PipelineError& e) {
    const int status = StatusFor(e.code()) == 500 ? 500 : 502;
    return JsonReply(status, {{"error", e.what()},
                              {"code", ErrorCodeName(e.code())},
                              {"trace", ToJson(ToTraceRows(e.partial_trace()))}});
  } catch (const Error& e) {
    return JsonReply(StatusFor(e.code()), {{"error", e.what()}, {"code", ErrorCodeName(e.code())}});
  } catch (const std::exception& e) {
    return ErrorReply(500, e.what());
  }
}

}  // namespace lexirag
