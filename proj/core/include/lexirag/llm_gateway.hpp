#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexirag/http.hpp"

namespace lexirag {

enum class LlmRole { kGenerator, kChecker };
enum class LlmBackendKind { kHttp, kScripted };
enum class PromptLanguage { kBn, kEn };

std::string_view ToString(LlmRole role);
std::string_view ToString(LlmBackendKind kind);
std::string_view ToString(PromptLanguage lang);
PromptLanguage ParsePromptLanguage(std::string_view s);

inline constexpr double kGeneratorTemperature = 0.1;
inline constexpr double kCheckerTemperature = 0.0;

struct LlmConfig {
  LlmRole role = LlmRole::kGenerator;
  std::string endpoint_url;
  std::string api_key;
  std::string model_id;
  double temperature = kGeneratorTemperature;
  int max_tokens = 512;
  std::chrono::milliseconds timeout{60000};
  LlmBackendKind backend = LlmBackendKind::kHttp;
  RetryPolicy retry{2, std::chrono::milliseconds(500), 2.0};

  static LlmConfig GeneratorDefaults();
  static LlmConfig CheckerDefaults();
  void Validate() const;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string Complete(const LlmConfig& cfg, const std::string& system_prompt,
                               const std::string& user_prompt) = 0;
};

/// OpenAI-style chat completions over HttpTransport.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(std::shared_ptr<HttpTransport> transport = nullptr,
                           Sleeper sleep = DefaultSleep);

  std::string Complete(const LlmConfig& cfg, const std::string& system_prompt,
                       const std::string& user_prompt) override;

 private:
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleep_;
};

struct ScriptedCall {
  std::string system_prompt;
  std::string user_prompt;
  std::string model_id;
  double temperature = 0.0;
  int max_tokens = 0;
};

/// Replays canned completions in order and records every call. Running past
/// the end of the script throws Error(kScriptExhausted).
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> script);

  std::string Complete(const LlmConfig& cfg, const std::string& system_prompt,
                       const std::string& user_prompt) override;

  std::vector<ScriptedCall> call_log() const;
  std::size_t calls() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::string> script_;
  std::vector<ScriptedCall> log_;
};

/// Validates the prompts and forwards to the backend; the text comes back
/// verbatim.
std::string ChatComplete(ChatBackend& backend, const LlmConfig& cfg,
                         const std::string& system_prompt, const std::string& user_prompt);

/// Named-placeholder prompt text. Placeholders are {query}, {chunks} and
/// {language}; anything else in braces is left alone.
struct PromptTemplates {
  std::string generator_header_bn;
  std::string generator_header_en;
  std::string generator_body;
  std::string checker_system_bn;
  std::string checker_system_en;
  std::string checker_user;

  static PromptTemplates Defaults();
  /// Starts from Defaults() and replaces each piece whose file exists in
  /// `dir` (generator_header.bn.txt, generator_header.en.txt,
  /// generator_body.txt, checker_system.bn.txt, checker_system.en.txt,
  /// checker_user.txt).
  static PromptTemplates LoadDir(const std::filesystem::path& dir);

  const std::string& GeneratorHeader(PromptLanguage lang) const;
  const std::string& CheckerSystem(PromptLanguage lang) const;
};

std::string RenderTemplate(std::string_view tmpl, const std::map<std::string, std::string>& vars);
std::string LanguageDisplayName(PromptLanguage lang);

/// Chunk texts separated by a line containing only "---".
std::string JoinChunkTexts(std::span<const std::string> texts);

enum class Verdict { kRelevant, kIrrelevant };
std::string_view ToString(Verdict v);

struct RelevanceVerdict {
  Verdict verdict = Verdict::kRelevant;
  std::optional<std::string> refined_query;
  bool parse_failed = false;
  std::string raw_response;

  friend bool operator==(const RelevanceVerdict&, const RelevanceVerdict&) = default;
};

/// Total parser for checker replies. The first line of the form
/// `VERDICT: RELEVANT|IRRELEVANT` (case-insensitive) decides. IRRELEVANT needs
/// a later `REFINED_QUERY: <text>` line; without one, or when no verdict line
/// exists at all, the result is relevant with parse_failed set.
RelevanceVerdict ParseVerdict(std::string_view raw);

RelevanceVerdict CheckRelevance(ChatBackend& backend, const LlmConfig& cfg,
                                const PromptTemplates& templates, PromptLanguage lang,
                                const std::string& query, std::span<const std::string> chunk_texts);

}  // namespace lexirag
