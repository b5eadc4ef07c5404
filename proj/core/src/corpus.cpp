#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>

#include "lexirag/corpus_ingest.hpp"
#include "lexirag/error.hpp"

namespace lexirag {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view ToString(LanguageHint hint) {
  switch (hint) {
    case LanguageHint::kBn: return "bn";
    case LanguageHint::kEn: return "en";
    case LanguageHint::kMixed: return "mixed";
  }
  return "mixed";
}

LanguageHint ParseLanguageHint(std::string_view s) {
  if (s == "bn") return LanguageHint::kBn;
  if (s == "en") return LanguageHint::kEn;
  if (s == "mixed") return LanguageHint::kMixed;
  throw Error(ErrorCode::kInvalidArgument,
              "language_hint must be bn, en or mixed, got '" + std::string(s) + "'");
}

void DocumentMeta::Validate() const {
  if (doc_id.empty()) throw Error(ErrorCode::kInvalidArgument, "doc_id is empty");
  if (page_count < 1) {
    throw Error(ErrorCode::kInvalidArgument, "page_count of '" + doc_id + "' must be >= 1");
  }
}

std::string ChunkId(std::string_view doc_id, std::size_t index) {
  char suffix[24];
  std::snprintf(suffix, sizeof suffix, "#%04zu", index);
  return std::string(doc_id) + suffix;
}

StatsReport CorpusStats(const std::vector<DocumentMeta>& metas) {
  if (metas.empty()) throw Error(ErrorCode::kInvalidArgument, "corpus stats need at least one document");
  StatsReport s;
  s.total_docs = static_cast<int>(metas.size());
  s.min_pages = metas.front().page_count;
  s.max_pages = metas.front().page_count;
  for (const auto& m : metas) {
    m.Validate();
    s.total_pages += m.page_count;
    s.min_pages = std::min(s.min_pages, m.page_count);
    s.max_pages = std::max(s.max_pages, m.page_count);
  }
  s.mean_pages = static_cast<double>(s.total_pages) / s.total_docs;
  return s;
}

std::string RenderStats(const StatsReport& stats) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "Total Documents          %d\n"
                "Total Pages              %d\n"
                "Minimum Pages            %d\n"
                "Maximum Pages            %d\n"
                "Average Pages per Doc    %.2f\n",
                stats.total_docs, stats.total_pages, stats.min_pages, stats.max_pages,
                stats.mean_pages);
  return buf;
}

namespace {

DocumentMeta MetaFromJson(const json& rec) {
  if (!rec.is_object()) throw Error(ErrorCode::kParse, "record is not an object");
  for (const auto& [key, _] : rec.items()) {
    if (key != "doc_id" && key != "title" && key != "page_count" && key != "language_hint" &&
        key != "source_path") {
      throw Error(ErrorCode::kParse, "unknown field '" + key + "'");
    }
  }
  DocumentMeta meta;
  try {
    meta.doc_id = rec.at("doc_id").get<std::string>();
    meta.title = rec.at("title").get<std::string>();
    meta.page_count = rec.at("page_count").get<int>();
    meta.language_hint = ParseLanguageHint(rec.at("language_hint").get<std::string>());
    if (rec.contains("source_path")) meta.source_path = rec["source_path"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
  meta.Validate();
  return meta;
}

json MetaToJson(const DocumentMeta& meta) {
  json j{{"doc_id", meta.doc_id},
         {"title", meta.title},
         {"page_count", meta.page_count},
         {"language_hint", ToString(meta.language_hint)}};
  if (!meta.source_path.empty()) j["source_path"] = meta.source_path;
  return j;
}

}  // namespace

std::string ManifestLine(const DocumentMeta& meta) { return MetaToJson(meta).dump(); }

std::vector<DocumentMeta> LoadManifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "manifest " + path.string() + " not found");
  std::vector<DocumentMeta> metas;
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      metas.push_back(MetaFromJson(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
    for (std::size_t i = 0; i + 1 < metas.size(); ++i) {
      if (metas[i].doc_id == metas.back().doc_id) {
        throw Error(ErrorCode::kAlreadyExists, path.string() + " line " + std::to_string(lineno) +
                                                   ": duplicate doc_id '" + metas.back().doc_id + "'");
      }
    }
  }
  return metas;
}

Corpus::Corpus(std::string id) : id_(std::move(id)) {
  if (id_.empty()) throw Error(ErrorCode::kInvalidArgument, "corpus id is empty");
}

IngestReport Corpus::IngestDocument(const DocumentMeta& meta, std::string_view text,
                                    const ChunkConfig& cfg, Embedder& embedder) {
  meta.Validate();
  std::unique_lock lock(mu_);
  for (const auto& d : documents_) {
    if (d.doc_id == meta.doc_id) {
      throw Error(ErrorCode::kAlreadyExists,
                  "document '" + meta.doc_id + "' already in corpus '" + id_ + "'");
    }
  }

  const auto drafts = SplitText(text, cfg);
  if (drafts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "document '" + meta.doc_id + "' has no text");
  }
  std::vector<std::string> texts;
  texts.reserve(drafts.size());
  for (const auto& d : drafts) texts.push_back(d.text);
  auto embeddings = embedder.Embed(texts);

  IngestReport report;
  std::vector<StoreRecord> records;
  records.reserve(drafts.size());
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    const Chunk chunk{ChunkId(meta.doc_id, i), meta.doc_id, i, drafts[i].text, drafts[i].char_span};
    report.chunk_ids.push_back(chunk.chunk_id);
    records.push_back({chunk.chunk_id, chunk.doc_id, chunk.text, std::move(embeddings[i])});
  }
  report.chunk_count = store_.AddChunks(std::move(records));
  documents_.push_back(meta);
  return report;
}

std::vector<DocumentMeta> Corpus::Documents() const {
  std::shared_lock lock(mu_);
  return documents_;
}

void Corpus::Save(const fs::path& dir) const {
  std::shared_lock lock(mu_);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "documents.jsonl", std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + (dir / "documents.jsonl").string());
    for (const auto& d : documents_) out << ManifestLine(d) << '\n';
  }
  store_.Persist(dir / "store.jsonl");
}

std::unique_ptr<Corpus> Corpus::Open(const fs::path& dir, std::string id) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kNotFound, "corpus directory " + dir.string() + " not found");
  }
  auto corpus = std::make_unique<Corpus>(std::move(id));
  corpus->documents_ = LoadManifest(dir / "documents.jsonl");
  corpus->store_ = VectorStore::Load(dir / "store.jsonl");
  return corpus;
}

}  // namespace lexirag
