#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexirag/embedding.hpp"
#include "lexirag/error.hpp"
#include "lexirag/llm_gateway.hpp"
#include "lexirag/vector_store.hpp"

namespace lexirag {

enum class PipelineMode { kVanilla, kAdvanced };

std::string_view ToString(PipelineMode mode);
PipelineMode ParsePipelineMode(std::string_view s);

inline constexpr int kMaxRefinementsLimit = 10;
inline constexpr std::size_t kMaxQueryChars = 4096;

struct PipelineConfig {
  PipelineMode mode = PipelineMode::kAdvanced;
  RetrievalConfig retrieval = RetrievalConfig::ForTopK(4);
  LlmConfig generator = LlmConfig::GeneratorDefaults();
  LlmConfig checker = LlmConfig::CheckerDefaults();
  int max_refinements = 3;
  PromptLanguage prompt_language = PromptLanguage::kEn;
  /// When refinements run out, answer with a fixed refusal instead of
  /// generating from the last retrieval.
  bool refuse_on_exhaustion = false;

  void Validate() const;
};

struct Query {
  std::string text;
  std::string corpus_id;

  void Validate() const;
};

struct IterationTrace {
  int iteration = 0;
  std::string query_used;
  std::vector<ScoredChunk> retrieved;
  std::optional<RelevanceVerdict> verdict;
};

struct RagResult {
  std::string answer;
  std::vector<ScoredChunk> final_chunks;
  std::vector<IterationTrace> trace;
  bool refinement_exhausted = false;
  std::string generator_prompt;
  /// Wall time per stage: retrieval, relevance_check, generation, total.
  std::map<std::string, double> timings_ms;
};

/// Carries whatever trace was built before a backend failed.
class PipelineError : public Error {
 public:
  PipelineError(ErrorCode code, const std::string& message, std::vector<IterationTrace> partial)
      : Error(code, message), partial_trace_(std::move(partial)) {}

  const std::vector<IterationTrace>& partial_trace() const { return partial_trace_; }

 private:
  std::vector<IterationTrace> partial_trace_;
};

struct GenerationMessages {
  std::string system_prompt;  // language-specific instruction header
  std::string user_prompt;    // context chunks and question

  std::string Combined() const { return system_prompt + "\n\n" + user_prompt; }
};

GenerationMessages BuildGenerationMessages(const PromptTemplates& templates,
                                           const std::string& query_text,
                                           std::span<const ScoredChunk> chunks,
                                           PromptLanguage language);

/// Header and body of the generator template, instantiated. Chunks keep their
/// retrieval order and are separated by "---" lines.
std::string BuildGenerationPrompt(const PromptTemplates& templates, const std::string& query_text,
                                  std::span<const ScoredChunk> chunks, PromptLanguage language);

std::string RefusalText(PromptLanguage language);

using SteadyClock = std::function<std::chrono::steady_clock::time_point()>;

/// Binds a store to its backends. Each call owns its own trace state, so one
/// pipeline may serve concurrent queries as long as the backends allow it.
class RagPipeline {
 public:
  RagPipeline(const VectorStore& store, Embedder& embedder, ChatBackend& generator,
              ChatBackend& checker, PromptTemplates templates = PromptTemplates::Defaults(),
              SteadyClock clock = std::chrono::steady_clock::now);

  /// Retrieve once with the original query, then generate.
  RagResult AnswerVanilla(const Query& query, const PipelineConfig& cfg) const;

  /// Retrieve, ask the checker, and re-retrieve with the checker's refined
  /// query until it accepts or max_refinements refinements have been made.
  /// Generation always sees the original query text.
  RagResult AnswerAdvanced(const Query& query, const PipelineConfig& cfg) const;

  RagResult Answer(const Query& query, const PipelineConfig& cfg) const;

 private:
  std::vector<ScoredChunk> RetrieveFor(const std::string& text, const PipelineConfig& cfg) const;
  void Generate(const Query& query, const PipelineConfig& cfg, RagResult& result) const;
  double ElapsedMs(std::chrono::steady_clock::time_point since) const;

  const VectorStore& store_;
  Embedder& embedder_;
  ChatBackend& generator_;
  ChatBackend& checker_;
  PromptTemplates templates_;
  SteadyClock clock_;
};

/// Canonical JSON of a result without timings; byte-stable for identical runs.
std::string SerializeRagResult(const RagResult& result);

}  // namespace lexirag
