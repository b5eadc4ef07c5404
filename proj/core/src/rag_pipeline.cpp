#include "lexirag/rag_pipeline.hpp"

#include <nlohmann/json.hpp>

#include "lexirag/utf8.hpp"

namespace lexirag {

using nlohmann::json;

std::string_view ToString(PipelineMode mode) {
  return mode == PipelineMode::kVanilla ? "vanilla" : "advanced";
}

PipelineMode ParsePipelineMode(std::string_view s) {
  if (s == "vanilla") return PipelineMode::kVanilla;
  if (s == "advanced") return PipelineMode::kAdvanced;
  throw Error(ErrorCode::kInvalidArgument, "pipeline must be vanilla or advanced, got '" + std::string(s) + "'");
}

void PipelineConfig::Validate() const {
  retrieval.Validate();
  generator.Validate();
  if (mode == PipelineMode::kAdvanced) checker.Validate();
  if (max_refinements < 0 || max_refinements > kMaxRefinementsLimit) {
    throw Error(ErrorCode::kInvalidArgument,
                "max_refinements must lie in [0, " + std::to_string(kMaxRefinementsLimit) + "]");
  }
}

void Query::Validate() const {
  if (text.empty()) throw Error(ErrorCode::kInvalidArgument, "question is empty");
  if (utf8::Length(text) > kMaxQueryChars) {
    throw Error(ErrorCode::kInvalidArgument,
                "question exceeds " + std::to_string(kMaxQueryChars) + " characters");
  }
}

GenerationMessages BuildGenerationMessages(const PromptTemplates& templates,
                                           const std::string& query_text,
                                           std::span<const ScoredChunk> chunks,
                                           PromptLanguage language) {
  if (chunks.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "generation prompt needs at least one chunk");
  }
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(c.record->text);
  const std::map<std::string, std::string> vars{{"query", query_text},
                                                {"chunks", JoinChunkTexts(texts)},
                                                {"language", LanguageDisplayName(language)}};
  return {RenderTemplate(templates.GeneratorHeader(language), vars),
          RenderTemplate(templates.generator_body, vars)};
}

std::string BuildGenerationPrompt(const PromptTemplates& templates, const std::string& query_text,
                                  std::span<const ScoredChunk> chunks, PromptLanguage language) {
  return BuildGenerationMessages(templates, query_text, chunks, language).Combined();
}

std::string RefusalText(PromptLanguage language) {
  if (language == PromptLanguage::kBn) {
    return "এই প্রশ্নের উত্তর দেওয়ার মতো যথেষ্ট প্রাসঙ্গিক তথ্য নথিগুলোতে পাওয়া যায়নি।";
  }
  return "The documents do not contain enough relevant information to answer this question.";
}

RagPipeline::RagPipeline(const VectorStore& store, Embedder& embedder, ChatBackend& generator,
                         ChatBackend& checker, PromptTemplates templates, SteadyClock clock)
    : store_(store),
      embedder_(embedder),
      generator_(generator),
      checker_(checker),
      templates_(std::move(templates)),
      clock_(std::move(clock)) {}

double RagPipeline::ElapsedMs(std::chrono::steady_clock::time_point since) const {
  return std::chrono::duration<double, std::milli>(clock_() - since).count();
}

std::vector<ScoredChunk> RagPipeline::RetrieveFor(const std::string& text,
                                                  const PipelineConfig& cfg) const {
  return store_.Retrieve(embedder_.EmbedOne(text), cfg.retrieval);
}

void RagPipeline::Generate(const Query& query, const PipelineConfig& cfg, RagResult& result) const {
  const auto messages =
      BuildGenerationMessages(templates_, query.text, result.final_chunks, cfg.prompt_language);
  result.generator_prompt = messages.Combined();
  result.answer =
      ChatComplete(generator_, cfg.generator, messages.system_prompt, messages.user_prompt);
}

namespace {

template <typename Fn>
auto WithTrace(const std::vector<IterationTrace>& trace, const char* stage, Fn&& fn) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const Error& e) {
    throw PipelineError(e.code(), std::string(stage) + ": " + e.what(), trace);
  }
}

}  // namespace

RagResult RagPipeline::AnswerVanilla(const Query& query, const PipelineConfig& cfg) const {
  query.Validate();
  cfg.Validate();
  if (store_.empty()) throw Error(ErrorCode::kEmptyCorpus, "corpus '" + query.corpus_id + "' is empty");

  const auto start = clock_();
  RagResult result;
  auto mark = clock_();
  auto retrieved = WithTrace(result.trace, "retrieval", [&] { return RetrieveFor(query.text, cfg); });
  result.timings_ms["retrieval"] = ElapsedMs(mark);
  result.trace.push_back({0, query.text, retrieved, std::nullopt});
  result.final_chunks = std::move(retrieved);

  mark = clock_();
  WithTrace(result.trace, "generation", [&] {
    Generate(query, cfg, result);
    return 0;
  });
  result.timings_ms["generation"] = ElapsedMs(mark);
  result.timings_ms["total"] = ElapsedMs(start);
  return result;
}

RagResult RagPipeline::AnswerAdvanced(const Query& query, const PipelineConfig& cfg) const {
  query.Validate();
  cfg.Validate();
  if (store_.empty()) throw Error(ErrorCode::kEmptyCorpus, "corpus '" + query.corpus_id + "' is empty");

  const auto start = clock_();
  RagResult result;
  double retrieval_ms = 0.0;
  double check_ms = 0.0;
  std::string current = query.text;

  for (int iteration = 0;; ++iteration) {
    auto mark = clock_();
    auto retrieved = WithTrace(result.trace, "retrieval", [&] { return RetrieveFor(current, cfg); });
    retrieval_ms += ElapsedMs(mark);
    result.trace.push_back({iteration, current, retrieved, std::nullopt});

    std::vector<std::string> texts;
    texts.reserve(retrieved.size());
    for (const auto& c : retrieved) texts.push_back(c.record->text);
    mark = clock_();
    auto verdict = WithTrace(result.trace, "relevance check", [&] {
      return CheckRelevance(checker_, cfg.checker, templates_, cfg.prompt_language, current, texts);
    });
    check_ms += ElapsedMs(mark);
    result.trace.back().verdict = verdict;
    result.final_chunks = std::move(retrieved);

    if (verdict.verdict == Verdict::kRelevant) break;
    if (iteration == cfg.max_refinements) {
      result.refinement_exhausted = true;
      break;
    }
    current = *verdict.refined_query;
  }
  result.timings_ms["retrieval"] = retrieval_ms;
  result.timings_ms["relevance_check"] = check_ms;

  if (result.refinement_exhausted && cfg.refuse_on_exhaustion) {
    result.answer = RefusalText(cfg.prompt_language);
    result.timings_ms["generation"] = 0.0;
  } else {
    const auto mark = clock_();
    WithTrace(result.trace, "generation", [&] {
      Generate(query, cfg, result);
      return 0;
    });
    result.timings_ms["generation"] = ElapsedMs(mark);
  }
  result.timings_ms["total"] = ElapsedMs(start);
  return result;
}

RagResult RagPipeline::Answer(const Query& query, const PipelineConfig& cfg) const {
  return cfg.mode == PipelineMode::kVanilla ? AnswerVanilla(query, cfg) : AnswerAdvanced(query, cfg);
}

namespace {

json ChunksJson(const std::vector<ScoredChunk>& chunks) {
  json arr = json::array();
  for (const auto& c : chunks) {
    arr.push_back({{"chunk_id", c.record->chunk_id},
                   {"doc_id", c.record->doc_id},
                   {"text", c.record->text},
                   {"score", c.score}});
  }
  return arr;
}

}  // namespace

std::string SerializeRagResult(const RagResult& result) {
  json trace = json::array();
  for (const auto& it : result.trace) {
    json entry{{"iteration", it.iteration},
               {"query_used", it.query_used},
               {"retrieved", ChunksJson(it.retrieved)},
               {"verdict", nullptr}};
    if (it.verdict) {
      entry["verdict"] = {{"verdict", ToString(it.verdict->verdict)},
                          {"refined_query", it.verdict->refined_query
                                                ? json(*it.verdict->refined_query)
                                                : json(nullptr)},
                          {"parse_failed", it.verdict->parse_failed},
                          {"raw_response", it.verdict->raw_response}};
    }
    trace.push_back(std::move(entry));
  }
  return json{{"answer", result.answer},
              {"final_chunks", ChunksJson(result.final_chunks)},
              {"trace", std::move(trace)},
              {"refinement_exhausted", result.refinement_exhausted},
              {"generator_prompt", result.generator_prompt}}
      .dump();
}

}  // namespace lexirag
