#include "lexirag/config.hpp"

#include <cstdlib>
#include <fstream>
#include <array>
#include <initializer_list>
#include <span>

#include "lexirag/error.hpp"

namespace lexirag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void Bad(const std::string& key, const std::string& why) {
  throw Error(ErrorCode::kInvalidArgument, "config key '" + key + "': " + why);
}

void RequireObject(const json& doc, const std::string& where) {
  if (!doc.is_object()) Bad(where.empty() ? "<root>" : where, "expected an object");
}

void RejectUnknown(const json& doc, const std::string& where,
                   std::span<const std::string_view> allowed) {
  for (const auto& [key, _] : doc.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) Bad(where.empty() ? key : where + "." + key, "unknown key");
  }
}

void RejectUnknown(const json& doc, const std::string& where,
                   std::initializer_list<std::string_view> allowed) {
  RejectUnknown(doc, where, std::span<const std::string_view>(allowed.begin(), allowed.size()));
}

template <typename T>
T Get(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    Bad(key, "wrong type");
  }
}

std::size_t GetPositive(const json& value, const std::string& key) {
  if (!value.is_number_integer() || value.get<long long>() <= 0) Bad(key, "expected a positive integer");
  return value.get<std::size_t>();
}

std::chrono::milliseconds GetMillis(const json& value, const std::string& key) {
  return std::chrono::milliseconds(GetPositive(value, key));
}

void ApplyRetrieval(RetrievalConfig& r, const json& doc) {
  RequireObject(doc, "retrieval");
  RejectUnknown(doc, "retrieval", {"top_k", "fetch_k", "mmr_lambda", "strategy"});
  if (doc.contains("top_k")) {
    r.top_k = GetPositive(doc["top_k"], "retrieval.top_k");
    if (!doc.contains("fetch_k")) r.fetch_k = RetrievalConfig::ForTopK(r.top_k).fetch_k;
  }
  if (doc.contains("fetch_k")) r.fetch_k = GetPositive(doc["fetch_k"], "retrieval.fetch_k");
  if (doc.contains("mmr_lambda")) {
    if (!doc["mmr_lambda"].is_number()) Bad("retrieval.mmr_lambda", "expected a number");
    r.mmr_lambda = doc["mmr_lambda"].get<double>();
  }
  if (doc.contains("strategy")) {
    const auto s = Get<std::string>(doc["strategy"], "retrieval.strategy");
    if (s == "mmr") {
      r.strategy = RetrievalStrategy::kMmr;
    } else if (s == "similarity") {
      r.strategy = RetrievalStrategy::kSimilarity;
    } else {
      Bad("retrieval.strategy", "expected similarity or mmr");
    }
  }
}

void ApplyLlm(LlmConfig& llm, const json& doc, const std::string& where) {
  RequireObject(doc, where);
  RejectUnknown(doc, where, {"model_id", "temperature", "max_tokens", "timeout_ms", "backend"});
  if (doc.contains("model_id")) llm.model_id = Get<std::string>(doc["model_id"], where + ".model_id");
  if (doc.contains("temperature")) {
    if (!doc["temperature"].is_number() || doc["temperature"].get<double>() < 0.0) {
      Bad(where + ".temperature", "expected a number >= 0");
    }
    llm.temperature = doc["temperature"].get<double>();
  }
  if (doc.contains("max_tokens")) {
    llm.max_tokens = static_cast<int>(GetPositive(doc["max_tokens"], where + ".max_tokens"));
  }
  if (doc.contains("timeout_ms")) llm.timeout = GetMillis(doc["timeout_ms"], where + ".timeout_ms");
  if (doc.contains("backend")) {
    const auto b = Get<std::string>(doc["backend"], where + ".backend");
    if (b == "http") {
      llm.backend = LlmBackendKind::kHttp;
    } else if (b == "scripted") {
      llm.backend = LlmBackendKind::kScripted;
    } else {
      Bad(where + ".backend", "expected http or scripted");
    }
  }
}

void ApplyEmbedder(EmbedderConfig& e, const json& doc) {
  RequireObject(doc, "embedder");
  RejectUnknown(doc, "embedder",
                {"backend", "model_id", "dim", "timeout_ms", "batch_size", "max_in_flight"});
  if (doc.contains("backend")) {
    const auto b = Get<std::string>(doc["backend"], "embedder.backend");
    if (b == "http") {
      e.backend = EmbedderBackend::kHttp;
    } else if (b == "mock") {
      e.backend = EmbedderBackend::kMock;
    } else {
      Bad("embedder.backend", "expected http or mock");
    }
  }
  if (doc.contains("model_id")) e.model_id = Get<std::string>(doc["model_id"], "embedder.model_id");
  if (doc.contains("dim")) e.dim = GetPositive(doc["dim"], "embedder.dim");
  if (doc.contains("timeout_ms")) e.timeout = GetMillis(doc["timeout_ms"], "embedder.timeout_ms");
  if (doc.contains("batch_size")) e.batch_size = GetPositive(doc["batch_size"], "embedder.batch_size");
  if (doc.contains("max_in_flight")) {
    e.max_in_flight = GetPositive(doc["max_in_flight"], "embedder.max_in_flight");
  }
}

void ApplyChunking(ChunkConfig& c, const json& doc) {
  RequireObject(doc, "chunking");
  RejectUnknown(doc, "chunking", {"chunk_size", "chunk_overlap", "separators"});
  if (doc.contains("chunk_size")) c.chunk_size = GetPositive(doc["chunk_size"], "chunking.chunk_size");
  if (doc.contains("chunk_overlap")) {
    if (!doc["chunk_overlap"].is_number_integer() || doc["chunk_overlap"].get<long long>() < 0) {
      Bad("chunking.chunk_overlap", "expected a nonnegative integer");
    }
    c.chunk_overlap = doc["chunk_overlap"].get<std::size_t>();
  }
  if (doc.contains("separators")) {
    c.separators = Get<std::vector<std::string>>(doc["separators"], "chunking.separators");
  }
}

constexpr std::array<std::string_view, 7> kPipelineKeys = {
    "mode",           "retrieval",        "generator",           "checker",
    "max_refinements", "prompt_language", "refuse_on_exhaustion"};

void ApplyPipelineKey(PipelineConfig& cfg, const std::string& key, const json& value) {
  if (key == "mode") {
    try {
      cfg.mode = ParsePipelineMode(Get<std::string>(value, key));
    } catch (const Error& e) {
      Bad(key, e.what());
    }
  } else if (key == "retrieval") {
    ApplyRetrieval(cfg.retrieval, value);
  } else if (key == "generator") {
    ApplyLlm(cfg.generator, value, "generator");
  } else if (key == "checker") {
    ApplyLlm(cfg.checker, value, "checker");
  } else if (key == "max_refinements") {
    if (!value.is_number_integer()) Bad(key, "expected an integer");
    const auto n = value.get<long long>();
    if (n < 0 || n > kMaxRefinementsLimit) {
      Bad(key, "must lie in [0, " + std::to_string(kMaxRefinementsLimit) + "]");
    }
    cfg.max_refinements = static_cast<int>(n);
  } else if (key == "prompt_language") {
    try {
      cfg.prompt_language = ParsePromptLanguage(Get<std::string>(value, key));
    } catch (const Error& e) {
      Bad(key, e.what());
    }
  } else if (key == "refuse_on_exhaustion") {
    if (!value.is_boolean()) Bad(key, "expected a boolean");
    cfg.refuse_on_exhaustion = value.get<bool>();
  }
}

}  // namespace

void ApplyPipelineOverrides(PipelineConfig& cfg, const json& overrides) {
  RequireObject(overrides, "overrides");
  RejectUnknown(overrides, "", kPipelineKeys);
  for (const auto& [key, value] : overrides.items()) ApplyPipelineKey(cfg, key, value);
}

AppConfig ParseAppConfig(const json& doc) {
  RequireObject(doc, "");
  RejectUnknown(doc, "",
                {"mode", "retrieval", "generator", "checker", "max_refinements", "prompt_language",
                 "refuse_on_exhaustion", "embedder", "chunking", "prompts_dir",
                 "max_concurrent_requests"});
  AppConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "embedder") {
      ApplyEmbedder(cfg.embedder, value);
    } else if (key == "chunking") {
      ApplyChunking(cfg.chunking, value);
    } else if (key == "prompts_dir") {
      cfg.prompts_dir = Get<std::string>(value, key);
    } else if (key == "max_concurrent_requests") {
      cfg.max_concurrent_requests = GetPositive(value, key);
    } else {
      ApplyPipelineKey(cfg.pipeline, key, value);
    }
  }
  try {
    cfg.chunking.Validate();
    cfg.pipeline.retrieval.Validate();
  } catch (const Error& e) {
    Bad("chunking/retrieval", e.what());
  }
  return cfg;
}

AppConfig LoadAppConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "config file " + path.string() + " not found");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "config file " + path.string() + ": " + e.what());
  }
  AppConfig cfg = ParseAppConfig(doc);
  if (!cfg.prompts_dir.empty() && cfg.prompts_dir.is_relative()) {
    cfg.prompts_dir = path.parent_path() / cfg.prompts_dir;
  }
  return cfg;
}

namespace {

json LlmJson(const LlmConfig& c) {
  return {{"model_id", c.model_id},
          {"temperature", c.temperature},
          {"max_tokens", c.max_tokens},
          {"timeout_ms", c.timeout.count()},
          {"backend", ToString(c.backend)}};
}

}  // namespace

json ToJson(const PipelineConfig& cfg) {
  return {{"mode", ToString(cfg.mode)},
          {"retrieval",
           {{"top_k", cfg.retrieval.top_k},
            {"fetch_k", cfg.retrieval.fetch_k},
            {"mmr_lambda", cfg.retrieval.mmr_lambda},
            {"strategy", cfg.retrieval.strategy == RetrievalStrategy::kMmr ? "mmr" : "similarity"}}},
          {"generator", LlmJson(cfg.generator)},
          {"checker", LlmJson(cfg.checker)},
          {"max_refinements", cfg.max_refinements},
          {"prompt_language", ToString(cfg.prompt_language)},
          {"refuse_on_exhaustion", cfg.refuse_on_exhaustion}};
}

PromptTemplates LoadTemplates(const AppConfig& cfg) {
  return cfg.prompts_dir.empty() ? PromptTemplates::Defaults()
                                 : PromptTemplates::LoadDir(cfg.prompts_dir);
}

EnvLookup ProcessEnv() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
  };
}

std::vector<std::string> LoadScript(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "script file " + path.string() + " not found");
  try {
    return json::parse(in).get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument,
                "script file " + path.string() + " must be a JSON array of strings: " + e.what());
  }
}

namespace {

std::shared_ptr<ChatBackend> ResolveChat(LlmConfig& llm, const std::string& prefix,
                                         const EnvLookup& env,
                                         const std::shared_ptr<HttpTransport>& transport) {
  if (auto script = env(prefix + "_SCRIPT")) {
    llm.backend = LlmBackendKind::kScripted;
    return std::make_shared<ScriptedBackend>(LoadScript(*script));
  }
  if (llm.backend == LlmBackendKind::kScripted) {
    throw Error(ErrorCode::kInvalidArgument, prefix + "_SCRIPT must be set for a scripted backend");
  }
  if (auto url = env(prefix + "_URL")) llm.endpoint_url = *url;
  if (auto key = env(prefix + "_API_KEY")) llm.api_key = *key;
  return std::make_shared<HttpChatBackend>(transport);
}

}  // namespace

BackendSet ResolveBackends(AppConfig& cfg, const EnvLookup& env,
                           std::shared_ptr<HttpTransport> transport) {
  if (auto url = env("LEXIRAG_EMBEDDER_URL")) cfg.embedder.endpoint_url = *url;
  if (auto key = env("LEXIRAG_EMBEDDER_API_KEY")) cfg.embedder.api_key = *key;
  BackendSet set;
  set.embedder = MakeEmbedder(cfg.embedder, transport);
  set.generator = ResolveChat(cfg.pipeline.generator, "LEXIRAG_GENERATOR", env, transport);
  set.checker = ResolveChat(cfg.pipeline.checker, "LEXIRAG_CHECKER", env, transport);
  return set;
}

}  // namespace lexirag
