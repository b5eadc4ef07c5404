#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lexirag/service.hpp"
#include "test_support.hpp"

namespace lexirag::testing {

/// Service over scripted backends and a 64-dim mock embedder.
inline std::unique_ptr<Service> ScriptedService(std::vector<std::string> generator,
                                                std::vector<std::string> checker,
                                                std::filesystem::path data_dir = {}) {
  AppConfig cfg;
  cfg.embedder.dim = 64;
  cfg.pipeline.generator.backend = LlmBackendKind::kScripted;
  cfg.pipeline.checker.backend = LlmBackendKind::kScripted;
  cfg.pipeline.retrieval = RetrievalConfig::ForTopK(2);
  BackendSet backends{std::make_shared<MockEmbedder>(64),
                      std::make_shared<ScriptedBackend>(std::move(generator)),
                      std::make_shared<ScriptedBackend>(std::move(checker))};
  return std::make_unique<Service>(std::move(cfg), std::move(backends), std::move(data_dir),
                                   TickingClock());
}

inline std::string DocumentBody(const std::string& doc_id, const std::string& text,
                                const std::string& lang = "mixed") {
  return nlohmann::json{{"doc_id", doc_id},
                        {"title", "Title " + doc_id},
                        {"page_count", 1},
                        {"language_hint", lang},
                        {"text", text}}
      .dump();
}

/// Creates corpus `id` holding a few police-related documents.
inline void SeedCorpus(Service& service, const std::string& id) {
  service.Dispatch("POST", "/v1/corpora", nlohmann::json{{"name", id}}.dump());
  const std::vector<std::pair<std::string, std::string>> docs{
      {"tp", "Tourist Police was formed in 2009 to protect visitors."},
      {"rp", "River Police patrols rivers and ferry routes."},
      {"bn", "ট্যুরিস্ট পুলিশ ২০০৯ সালে গঠিত হয়।"},
      {"bud", "The budget was approved by the ministry."}};
  for (const auto& [doc_id, text] : docs) {
    service.Dispatch("POST", "/v1/corpora/" + id + "/documents", DocumentBody(doc_id, text));
  }
}

inline std::string QueryBody(const std::string& corpus, const std::string& question,
                             const std::string& pipeline = "advanced") {
  return nlohmann::json{{"corpus_id", corpus}, {"question", question}, {"pipeline", pipeline}}.dump();
}

}  // namespace lexirag::testing
