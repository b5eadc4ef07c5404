#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lexirag/corpus_ingest.hpp"
#include "lexirag/error.hpp"
#include "lexirag/evaluation.hpp"
#include "lexirag/rag_pipeline.hpp"
#include "lexirag/service.hpp"
#include "lexirag/utf8.hpp"

namespace lexirag::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Thrown for anything the user can fix by changing arguments or config.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string data_dir;
  std::string config_path;
  std::string prompts_dir;
};

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << content;
}

AppConfig LoadConfig(const Globals& g) {
  AppConfig cfg;
  try {
    if (!g.config_path.empty()) cfg = LoadAppConfig(g.config_path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (!g.prompts_dir.empty()) cfg.prompts_dir = g.prompts_dir;
  return cfg;
}

BackendSet Backends(AppConfig& cfg, const EnvLookup& env,
                    const std::shared_ptr<HttpTransport>& transport) {
  try {
    return ResolveBackends(cfg, env, transport);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::shared_ptr<Corpus> OpenCorpus(const Globals& g, const std::string& id) {
  if (!IsValidCorpusId(id)) throw ConfigError("invalid corpus id '" + id + "'");
  const fs::path dir = fs::path(g.data_dir) / id;
  if (!fs::exists(dir / "store.jsonl")) {
    throw ConfigError("corpus '" + id + "' not found under " + g.data_dir);
  }
  try {
    return Corpus::Open(dir, id);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

// ---- ingest ----------------------------------------------------------------

struct IngestArgs {
  std::string corpus;
  std::string manifest;
  std::string ocr;
  std::vector<std::string> sources;
};

int RunIngest(const Globals& g, const IngestArgs& a, std::ostream& out, std::ostream& err,
              const EnvLookup& env, const std::shared_ptr<HttpTransport>& transport) {
  AppConfig cfg = LoadConfig(g);
  std::vector<DocumentMeta> metas;
  try {
    metas = LoadManifest(a.manifest);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (metas.size() != a.sources.size()) {
    throw ConfigError("manifest lists " + std::to_string(metas.size()) + " documents but " +
                      std::to_string(a.sources.size()) + " source files were given");
  }
  if (!IsValidCorpusId(a.corpus)) throw ConfigError("invalid corpus id '" + a.corpus + "'");
  BackendSet backends = Backends(cfg, env, transport);

  const fs::path dir = fs::path(g.data_dir) / a.corpus;
  std::shared_ptr<Corpus> corpus = fs::exists(dir / "store.jsonl")
                                       ? std::shared_ptr<Corpus>(Corpus::Open(dir, a.corpus))
                                       : std::make_shared<Corpus>(a.corpus);
  int failures = 0;
  for (std::size_t i = 0; i < metas.size(); ++i) {
    DocumentMeta meta = metas[i];
    if (meta.source_path.empty()) meta.source_path = a.sources[i];
    try {
      const std::string text =
          a.ocr.empty() ? ReadFile(a.sources[i]) : PreprocessDocument(a.sources[i], a.ocr);
      const auto report = corpus->IngestDocument(meta, text, cfg.chunking, *backends.embedder);
      out << meta.doc_id << ": " << report.chunk_count << " chunks\n";
    } catch (const std::exception& e) {
      err << "error: " << meta.doc_id << ": " << e.what() << "\n";
      ++failures;
    }
  }
  fs::create_directories(dir);
  corpus->Save(dir);
  out << "corpus " << a.corpus << ": " << corpus->Documents().size() << " documents, "
      << corpus->store().size() << " chunks\n";
  return failures == 0 ? kExitOk : kExitItemFailure;
}

// ---- query -----------------------------------------------------------------

struct QueryArgs {
  std::string corpus;
  std::string pipeline = "advanced";
  int top_k = 0;
  bool json = false;
  std::string question;
};

int RunQuery(const Globals& g, const QueryArgs& a, std::ostream& out, std::ostream& err,
             const EnvLookup& env, const std::shared_ptr<HttpTransport>& transport) {
  AppConfig cfg = LoadConfig(g);
  const auto corpus = OpenCorpus(g, a.corpus);
  BackendSet backends = Backends(cfg, env, transport);
  PipelineConfig pc = cfg.pipeline;
  pc.mode = ParsePipelineMode(a.pipeline);
  if (a.top_k > 0) {
    const auto strategy = pc.retrieval.strategy;
    const auto lambda = pc.retrieval.mmr_lambda;
    pc.retrieval = RetrievalConfig::ForTopK(static_cast<std::size_t>(a.top_k));
    pc.retrieval.strategy = strategy;
    pc.retrieval.mmr_lambda = lambda;
  }
  const Query query{a.question, a.corpus};
  try {
    pc.Validate();
    query.Validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  PromptTemplates templates;
  try {
    templates = LoadTemplates(cfg);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  const RagPipeline pipeline(corpus->store(), *backends.embedder, *backends.generator,
                             *backends.checker, templates);
  try {
    const RagResult result = pipeline.Answer(query, pc);
    if (a.json) {
      out << ToJson(ToQueryResponse(result)).dump(2) << "\n";
      return kExitOk;
    }
    out << result.answer << "\n\n";
    for (const auto& row : ToTraceRows(result.trace)) {
      out << "[" << row.iteration << "] " << row.query_used;
      if (row.verdict) out << "  -> " << *row.verdict;
      out << "\n";
    }
    for (const auto& c : result.final_chunks) {
      char score[32];
      std::snprintf(score, sizeof score, "%.4f", c.score);
      out << "  " << c.record->chunk_id << "  " << score << "\n";
    }
    if (result.refinement_exhausted) out << "(refinement limit reached)\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitItemFailure;
  }
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string corpus;
  std::string testset;
  std::string pipeline = "both";
  std::string temperatures;
  std::string prompt_language;
  std::string out_dir;
};

struct Failure {
  std::string pipeline;
  std::string id;
  std::string message;
};

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string::npos ? s.size() : comma;
    std::string part = s.substr(start, end - start);
    while (!part.empty() && utf8::IsAsciiSpace(part.back())) part.pop_back();
    while (!part.empty() && utf8::IsAsciiSpace(part.front())) part.erase(part.begin());
    parts.push_back(part);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return parts;
}

std::vector<std::pair<std::string, double>> ParseTemperatures(const std::string& list,
                                                             double fallback) {
  std::vector<std::pair<std::string, double>> temps;
  if (list.empty()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", fallback);
    temps.emplace_back(buf, fallback);
    return temps;
  }
  for (const auto& token : SplitList(list)) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (token.empty() || used != token.size()) throw ConfigError("bad temperature '" + token + "'");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", value);
    temps.emplace_back(buf, value);
  }
  return temps;
}

std::string Digest(const RagResult& result) {
  return "fnv1a64:" + utf8::ToHex64(utf8::Fnv1a64(SerializeRagResult(result)));
}

int RunEval(const Globals& g, const EvalArgs& a, std::ostream& out, std::ostream& err,
            const EnvLookup& env, const std::shared_ptr<HttpTransport>& transport) {
  AppConfig cfg = LoadConfig(g);
  std::vector<QaItem> items;
  try {
    if (!fs::exists(a.testset)) throw ConfigError("testset " + a.testset + " not found");
    items = LoadTestset(a.testset);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (items.empty()) throw ConfigError("testset " + a.testset + " has no items");
  const auto corpus = OpenCorpus(g, a.corpus);
  BackendSet backends = Backends(cfg, env, transport);
  PromptTemplates templates;
  try {
    templates = LoadTemplates(cfg);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  std::vector<PipelineMode> modes;
  if (a.pipeline == "both") {
    modes = {PipelineMode::kVanilla, PipelineMode::kAdvanced};
  } else {
    modes = {ParsePipelineMode(a.pipeline)};
  }
  const auto temps = ParseTemperatures(a.temperatures, cfg.pipeline.generator.temperature);

  // Validate every configuration before spending any backend calls.
  std::map<std::pair<std::string, PipelineMode>, PipelineConfig> configs;
  for (const auto& [label, t] : temps) {
    for (const auto mode : modes) {
      PipelineConfig pc = cfg.pipeline;
      pc.mode = mode;
      pc.generator.temperature = t;
      if (!a.prompt_language.empty()) pc.prompt_language = ParsePromptLanguage(a.prompt_language);
      try {
        pc.Validate();
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      configs[{label, mode}] = pc;
    }
  }
  fs::create_directories(a.out_dir);

  const RagPipeline pipeline(corpus->store(), *backends.embedder, *backends.generator,
                             *backends.checker, templates);
  std::vector<Failure> failures;
  for (const auto& [label, t] : temps) {
    std::map<PipelineMode, std::map<std::string, std::string>> answers;
    std::vector<Failure> run_failures;
    for (const auto mode : modes) {
      const PipelineConfig& pc = configs.at({label, mode});
      const std::string name(ToString(mode));
      std::vector<AnswerRecord> records;
      for (const auto& item : items) {
        try {
          const RagResult result = pipeline.Answer({item.question, a.corpus}, pc);
          if (result.answer.empty()) throw Error(ErrorCode::kBackend, "empty answer");
          answers[mode][item.id] = result.answer;
          records.push_back({item.id, result.answer, name, Digest(result)});
        } catch (const std::exception& e) {
          run_failures.push_back({name, item.id, e.what()});
        }
      }
      WriteAnswers(fs::path(a.out_dir) / ("answers_" + name + "_t" + label + ".jsonl"), records);
    }

    // Score only items every selected pipeline answered so the rows compare.
    std::vector<QaItem> scored;
    for (const auto& item : items) {
      bool ok = true;
      for (const auto mode : modes) ok = ok && answers[mode].contains(item.id);
      if (ok) scored.push_back(item);
    }

    json report{{"temperature", t},
                {"n_items", items.size()},
                {"n_scored", scored.size()},
                {"pipelines", json::object()}};
    std::string text;
    if (!scored.empty()) {
      std::vector<std::pair<std::string, EvalReport>> reports;
      for (const auto mode : modes) {
        const std::string name(ToString(mode));
        reports.emplace_back(name, SemanticSimilarityEval(answers[mode], scored, *backends.embedder));
        report["pipelines"][name] = ToJson(reports.back().second);
      }
      text = RenderReportTable(reports);
      if (reports.size() == 2) {
        const ComparisonTable table = ComparePipelines(reports[0].second, reports[1].second);
        report["comparison"] = ToJson(table);
        text += "\n" + table.Render();
      }
    }
    json failed = json::array();
    for (const auto& f : run_failures) {
      failed.push_back({{"pipeline", f.pipeline}, {"id", f.id}, {"error", f.message}});
    }
    report["failures"] = std::move(failed);
    WriteFile(fs::path(a.out_dir) / ("report_t" + label + ".json"), report.dump(2) + "\n");
    WriteFile(fs::path(a.out_dir) / ("report_t" + label + ".txt"), text);
    out << "temperature " << label << ": " << scored.size() << "/" << items.size()
        << " items scored\n"
        << text;
    failures.insert(failures.end(), run_failures.begin(), run_failures.end());
  }

  for (const auto& f : failures) {
    err << "failed: " << f.pipeline << " " << f.id << ": " << f.message << "\n";
  }
  return failures.empty() ? kExitOk : kExitItemFailure;
}

// ---- stats / serve ---------------------------------------------------------

int RunStats(const std::string& manifest, std::ostream& out) {
  try {
    out << RenderStats(CorpusStats(LoadManifest(manifest)));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return kExitOk;
}

int RunServe(const Globals& g, const std::string& addr, std::ostream& out, const EnvLookup& env,
             const std::shared_ptr<HttpTransport>& transport) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ConfigError("--addr must be host:port");
  int port = 0;
  try {
    port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("bad port in '" + addr + "'");
  }
  AppConfig cfg = LoadConfig(g);
  BackendSet backends = Backends(cfg, env, transport);
  std::unique_ptr<Service> service;
  try {
    service = std::make_unique<Service>(cfg, backends, g.data_dir);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  HttpServer server(*service, cfg.max_concurrent_requests);
  const int bound = server.Bind(addr.substr(0, colon), port);
  out << "listening on " << addr.substr(0, colon) << ":" << bound << std::endl;
  server.Listen();
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
           const EnvLookup& env, std::shared_ptr<HttpTransport> transport) {
  CLI::App app{"Bilingual legal question answering over ingested corpora", "lexirag"};
  app.require_subcommand(1);

  Globals g;
  g.data_dir = env("LEXIRAG_DATA_DIR").value_or("lexirag-data");
  app.add_option("--data-dir", g.data_dir, "Directory holding ingested corpora");
  app.add_option("--config", g.config_path, "Pipeline config file (JSON)");
  app.add_option("--prompts", g.prompts_dir, "Directory of prompt template overrides");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Chunk, embed and store documents");
  ingest_cmd->add_option("--corpus", ingest.corpus)->required();
  ingest_cmd->add_option("--manifest", ingest.manifest, "JSONL document metadata")->required();
  ingest_cmd->add_option("--ocr", ingest.ocr, "OCR command with {input} and {output}");
  ingest_cmd->add_option("sources", ingest.sources, "Text files (or page images with --ocr)")
      ->required();

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "Answer one question");
  query_cmd->add_option("--corpus", query.corpus)->required();
  query_cmd->add_option("--pipeline", query.pipeline)
      ->check(CLI::IsMember({"vanilla", "advanced"}));
  query_cmd->add_option("--top-k", query.top_k)->check(CLI::PositiveNumber);
  query_cmd->add_flag("--json", query.json, "Print the full response as JSON");
  query_cmd->add_option("question", query.question)->required();

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Answer a test set and score it");
  eval_cmd->add_option("--corpus", eval.corpus)->required();
  eval_cmd->add_option("--testset", eval.testset)->required();
  eval_cmd->add_option("--pipeline", eval.pipeline)
      ->check(CLI::IsMember({"both", "vanilla", "advanced"}));
  eval_cmd->add_option("--temperature", eval.temperatures, "Comma-separated generator temperatures");
  eval_cmd->add_option("--prompt-language", eval.prompt_language)
      ->check(CLI::IsMember({"bn", "en"}));
  eval_cmd->add_option("--out", eval.out_dir)->required();

  std::string manifest;
  auto* stats_cmd = app.add_subcommand("stats", "Summarize a manifest");
  stats_cmd->add_option("--manifest", manifest)->required();

  std::string addr;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--addr", addr)->required();

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfigError;
  }

  try {
    if (*ingest_cmd) return RunIngest(g, ingest, out, err, env, transport);
    if (*query_cmd) return RunQuery(g, query, out, err, env, transport);
    if (*eval_cmd) return RunEval(g, eval, out, err, env, transport);
    if (*stats_cmd) return RunStats(manifest, out);
    if (*serve_cmd) return RunServe(g, addr, out, env, transport);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitItemFailure;
  }
  return kExitConfigError;
}

}  // namespace lexirag::cli
