#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "lexirag/embedding.hpp"
#include "lexirag/vector_store.hpp"

namespace lexirag {

enum class LanguageHint { kBn, kEn, kMixed };

std::string_view ToString(LanguageHint hint);
LanguageHint ParseLanguageHint(std::string_view s);

struct DocumentMeta {
  std::string doc_id;
  std::string title;
  int page_count = 1;
  LanguageHint language_hint = LanguageHint::kMixed;
  std::string source_path;

  void Validate() const;
  friend bool operator==(const DocumentMeta&, const DocumentMeta&) = default;
};

/// Sizes are counted in Unicode scalar values.
struct ChunkConfig {
  std::size_t chunk_size = 1000;
  std::size_t chunk_overlap = 150;
  std::vector<std::string> separators{"\n\n", "\n", "।", ". ", " ", ""};

  void Validate() const;
};

/// [start, end) in scalar-value offsets of the source text.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct ChunkDraft {
  std::string text;
  CharSpan char_span;
  friend bool operator==(const ChunkDraft&, const ChunkDraft&) = default;
};

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::size_t index = 0;
  std::string text;
  CharSpan char_span;
};

struct StatsReport {
  int total_docs = 0;
  int total_pages = 0;
  int min_pages = 0;
  int max_pages = 0;
  double mean_pages = 0.0;
};

struct IngestReport {
  std::size_t chunk_count = 0;
  std::vector<std::string> chunk_ids;
};

/// Recursive character splitting. The text is cut at the highest-priority
/// separator it contains (each separator stays attached to the piece it
/// starts); pieces longer than chunk_size are cut again with the remaining
/// separators, "" meaning single scalars. The resulting pieces are merged
/// greedily into chunks of at most chunk_size; after a chunk is emitted, the
/// trailing pieces totalling at most chunk_overlap are carried into the next
/// one. Chunks are then trimmed of ASCII whitespace and whitespace-only chunks
/// dropped. Throws on invalid config or malformed UTF-8.
std::vector<ChunkDraft> SplitText(std::string_view text, const ChunkConfig& cfg);

/// Runs `ocr_command_template` through /bin/sh once per page and joins the
/// outputs with form feeds. `source_path` is either one page image or a
/// directory whose regular files (sorted by name) are the page images. The
/// template must contain {input} and {output}; both are replaced by
/// shell-quoted paths.
std::string PreprocessDocument(const std::filesystem::path& source_path,
                               std::string_view ocr_command_template);

StatsReport CorpusStats(const std::vector<DocumentMeta>& metas);
std::string RenderStats(const StatsReport& stats);

/// Line-delimited JSON records with doc_id, title, page_count, language_hint
/// and an optional source_path. Errors name the offending line.
std::vector<DocumentMeta> LoadManifest(const std::filesystem::path& path);
std::string ManifestLine(const DocumentMeta& meta);

/// A named collection of documents plus the vector index over their chunks.
/// Ingestion is single-writer and all-or-nothing per document.
class Corpus {
 public:
  explicit Corpus(std::string id);

  const std::string& id() const { return id_; }

  IngestReport IngestDocument(const DocumentMeta& meta, std::string_view text,
                              const ChunkConfig& cfg, Embedder& embedder);

  std::vector<DocumentMeta> Documents() const;
  const VectorStore& store() const { return store_; }

  /// Writes documents.jsonl and store.jsonl under `dir`.
  void Save(const std::filesystem::path& dir) const;
  static std::unique_ptr<Corpus> Open(const std::filesystem::path& dir, std::string id);

 private:
  std::string id_;
  mutable std::shared_mutex mu_;
  std::vector<DocumentMeta> documents_;
  VectorStore store_;
};

std::string ChunkId(std::string_view doc_id, std::size_t index);

}  // namespace lexirag
