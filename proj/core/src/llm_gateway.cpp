#include "lexirag/llm_gateway.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lexirag/default_prompts.hpp"
#include "lexirag/error.hpp"

namespace lexirag {

using nlohmann::json;

std::string_view ToString(LlmRole role) {
  return role == LlmRole::kGenerator ? "generator" : "checker";
}

std::string_view ToString(LlmBackendKind kind) {
  return kind == LlmBackendKind::kHttp ? "http" : "scripted";
}

std::string_view ToString(PromptLanguage lang) { return lang == PromptLanguage::kBn ? "bn" : "en"; }

PromptLanguage ParsePromptLanguage(std::string_view s) {
  if (s == "bn") return PromptLanguage::kBn;
  if (s == "en") return PromptLanguage::kEn;
  throw Error(ErrorCode::kInvalidArgument, "prompt language must be bn or en, got '" + std::string(s) + "'");
}

std::string_view ToString(Verdict v) { return v == Verdict::kRelevant ? "relevant" : "irrelevant"; }

LlmConfig LlmConfig::GeneratorDefaults() {
  LlmConfig cfg;
  cfg.role = LlmRole::kGenerator;
  cfg.temperature = kGeneratorTemperature;
  return cfg;
}

LlmConfig LlmConfig::CheckerDefaults() {
  LlmConfig cfg;
  cfg.role = LlmRole::kChecker;
  cfg.temperature = kCheckerTemperature;
  cfg.max_tokens = 256;
  return cfg;
}

void LlmConfig::Validate() const {
  if (!(temperature >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
  if (max_tokens <= 0) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be positive");
  if (backend == LlmBackendKind::kHttp && endpoint_url.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("no endpoint configured for the ") + std::string(ToString(role)));
  }
}

// ---- backends --------------------------------------------------------------

HttpChatBackend::HttpChatBackend(std::shared_ptr<HttpTransport> transport, Sleeper sleep)
    : transport_(transport ? std::move(transport) : MakeDefaultTransport()),
      sleep_(std::move(sleep)) {}

std::string HttpChatBackend::Complete(const LlmConfig& cfg, const std::string& system_prompt,
                                      const std::string& user_prompt) {
  cfg.Validate();
  HttpRequest req;
  req.url = cfg.endpoint_url;
  req.timeout = cfg.timeout;
  req.headers.emplace_back("Content-Type", "application/json");
  if (!cfg.api_key.empty()) req.headers.emplace_back("Authorization", "Bearer " + cfg.api_key);
  req.body = json{{"model", cfg.model_id},
                  {"messages",
                   json::array({json{{"role", "system"}, {"content", system_prompt}},
                                json{{"role", "user"}, {"content", user_prompt}}})},
                  {"temperature", cfg.temperature},
                  {"max_tokens", cfg.max_tokens}}
                 .dump();

  const HttpResponse resp = WithRetries(cfg.retry, sleep_, [&] { return transport_->Post(req); });
  if (resp.status < 200 || resp.status >= 300) {
    throw Error(ErrorCode::kBackend, std::string(ToString(cfg.role)) + " endpoint returned HTTP " +
                                         std::to_string(resp.status) + ": " +
                                         resp.body.substr(0, 200));
  }
  try {
    return json::parse(resp.body).at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kBackend, std::string("malformed chat response: ") + e.what());
  }
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> script) : script_(std::move(script)) {}

std::string ScriptedBackend::Complete(const LlmConfig& cfg, const std::string& system_prompt,
                                      const std::string& user_prompt) {
  std::lock_guard lock(mu_);
  if (log_.size() >= script_.size()) {
    throw Error(ErrorCode::kScriptExhausted,
                "scripted backend exhausted after " + std::to_string(script_.size()) + " replies");
  }
  log_.push_back({system_prompt, user_prompt, cfg.model_id, cfg.temperature, cfg.max_tokens});
  return script_[log_.size() - 1];
}

std::vector<ScriptedCall> ScriptedBackend::call_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

std::string ChatComplete(ChatBackend& backend, const LlmConfig& cfg,
                         const std::string& system_prompt, const std::string& user_prompt) {
  if (system_prompt.empty() || user_prompt.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "chat prompts must be non-empty");
  }
  return backend.Complete(cfg, system_prompt, user_prompt);
}

// ---- templates -------------------------------------------------------------

namespace {

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\f\v");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

PromptTemplates PromptTemplates::Defaults() {
  return PromptTemplates{default_prompts::kGeneratorHeaderBn, default_prompts::kGeneratorHeaderEn,
                         default_prompts::kGeneratorBody,     default_prompts::kCheckerSystemBn,
                         default_prompts::kCheckerSystemEn,   default_prompts::kCheckerUser};
}

PromptTemplates PromptTemplates::LoadDir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kNotFound, "prompt directory " + dir.string() + " not found");
  }
  PromptTemplates t = Defaults();
  const std::pair<const char*, std::string*> files[] = {
      {"generator_header.bn.txt", &t.generator_header_bn},
      {"generator_header.en.txt", &t.generator_header_en},
      {"generator_body.txt", &t.generator_body},
      {"checker_system.bn.txt", &t.checker_system_bn},
      {"checker_system.en.txt", &t.checker_system_en},
      {"checker_user.txt", &t.checker_user},
  };
  for (const auto& [name, slot] : files) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) continue;
    std::ostringstream buf;
    buf << in.rdbuf();
    *slot = Trim(buf.str());
  }
  return t;
}

const std::string& PromptTemplates::GeneratorHeader(PromptLanguage lang) const {
  return lang == PromptLanguage::kBn ? generator_header_bn : generator_header_en;
}

const std::string& PromptTemplates::CheckerSystem(PromptLanguage lang) const {
  return lang == PromptLanguage::kBn ? checker_system_bn : checker_system_en;
}

std::string RenderTemplate(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string LanguageDisplayName(PromptLanguage lang) {
  return lang == PromptLanguage::kBn ? "বাংলা" : "English";
}

std::string JoinChunkTexts(std::span<const std::string> texts) {
  std::string out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i > 0) out += "\n---\n";
    out += texts[i];
  }
  return out;
}

// ---- relevance check -------------------------------------------------------

namespace {

bool IsRegexSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view TrimView(std::string_view s) {
  while (!s.empty() && IsRegexSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsRegexSpace(s.back())) s.remove_suffix(1);
  return s;
}

bool EqualsIgnoreCase(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char x = a[i];
    char y = b[i];
    if (x >= 'a' && x <= 'z') x = static_cast<char>(x - 'a' + 'A');
    if (y >= 'a' && y <= 'z') y = static_cast<char>(y - 'a' + 'A');
    if (x != y) return false;
  }
  return true;
}

// Returns the remainder after `keyword` when the left-trimmed line starts with
// it (case-insensitively).
std::optional<std::string_view> AfterKeyword(std::string_view line, std::string_view keyword) {
  while (!line.empty() && IsRegexSpace(line.front())) line.remove_prefix(1);
  if (line.size() < keyword.size() || !EqualsIgnoreCase(line.substr(0, keyword.size()), keyword)) {
    return std::nullopt;
  }
  return line.substr(keyword.size());
}

std::vector<std::string_view> Lines(std::string_view raw) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= raw.size()) {
    const auto nl = raw.find('\n', start);
    const auto end = nl == std::string_view::npos ? raw.size() : nl;
    lines.push_back(raw.substr(start, end - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

}  // namespace

RelevanceVerdict ParseVerdict(std::string_view raw) {
  RelevanceVerdict fail_open{Verdict::kRelevant, std::nullopt, true, std::string(raw)};
  const auto lines = Lines(raw);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto rest = AfterKeyword(lines[i], "VERDICT:");
    if (!rest) continue;
    const auto word = TrimView(*rest);
    if (EqualsIgnoreCase(word, "RELEVANT")) {
      return {Verdict::kRelevant, std::nullopt, false, std::string(raw)};
    }
    if (!EqualsIgnoreCase(word, "IRRELEVANT")) continue;
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const auto refined = AfterKeyword(lines[j], "REFINED_QUERY:");
      if (!refined) continue;
      const auto query = TrimView(*refined);
      if (!query.empty()) {
        return {Verdict::kIrrelevant, std::string(query), false, std::string(raw)};
      }
    }
    return fail_open;
  }
  return fail_open;
}

RelevanceVerdict CheckRelevance(ChatBackend& backend, const LlmConfig& cfg,
                                const PromptTemplates& templates, PromptLanguage lang,
                                const std::string& query, std::span<const std::string> chunk_texts) {
  if (chunk_texts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "relevance check needs at least one chunk");
  }
  const std::map<std::string, std::string> vars{{"query", query},
                                                {"chunks", JoinChunkTexts(chunk_texts)},
                                                {"language", LanguageDisplayName(lang)}};
  const std::string system_prompt = RenderTemplate(templates.CheckerSystem(lang), vars);
  const std::string user_prompt = RenderTemplate(templates.checker_user, vars);
  return ParseVerdict(ChatComplete(backend, cfg, system_prompt, user_prompt));
}

}  // namespace lexirag
