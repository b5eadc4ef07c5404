#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "lexirag/corpus_ingest.hpp"
#include "lexirag/embedding.hpp"
#include "lexirag/llm_gateway.hpp"
#include "lexirag/rag_pipeline.hpp"

namespace lexirag {

/// Contents of a config file: the PipelineConfig keys at top level, plus
/// optional "embedder", "chunking", "prompts_dir" and
/// "max_concurrent_requests". Endpoint URLs and API keys are not accepted
/// here; they come from the environment (see ResolveBackends).
struct AppConfig {
  PipelineConfig pipeline;
  EmbedderConfig embedder;
  ChunkConfig chunking;
  std::filesystem::path prompts_dir;
  std::size_t max_concurrent_requests = 8;
};

/// Throws Error(kInvalidArgument) naming the offending key on unknown keys or
/// wrongly-typed values.
AppConfig ParseAppConfig(const nlohmann::json& doc);
AppConfig LoadAppConfig(const std::filesystem::path& path);

/// Applies a partial PipelineConfig document on top of `cfg`; same key rules
/// as the config file.
void ApplyPipelineOverrides(PipelineConfig& cfg, const nlohmann::json& overrides);

nlohmann::json ToJson(const PipelineConfig& cfg);

PromptTemplates LoadTemplates(const AppConfig& cfg);

using EnvLookup = std::function<std::optional<std::string>(const std::string& name)>;
EnvLookup ProcessEnv();

struct BackendSet {
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<ChatBackend> generator;
  std::shared_ptr<ChatBackend> checker;
};

/// Wires backends from the environment:
///   LEXIRAG_EMBEDDER_URL / LEXIRAG_EMBEDDER_API_KEY
///   LEXIRAG_GENERATOR_URL / _API_KEY / _SCRIPT
///   LEXIRAG_CHECKER_URL / _API_KEY / _SCRIPT
/// A *_SCRIPT variable names a JSON array of canned replies and selects the
/// scripted backend for that role. URLs and keys are copied into `cfg`.
BackendSet ResolveBackends(AppConfig& cfg, const EnvLookup& env,
                           std::shared_ptr<HttpTransport> transport = nullptr);

std::vector<std::string> LoadScript(const std::filesystem::path& path);

}  // namespace lexirag
