#include "lexirag/vector_store.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lexirag/error.hpp"
#include "lexirag/utf8.hpp"

namespace lexirag {

using nlohmann::json;

RetrievalConfig RetrievalConfig::ForTopK(std::size_t top_k) {
  RetrievalConfig cfg;
  cfg.top_k = top_k;
  cfg.fetch_k = std::max<std::size_t>(4 * top_k, 20);
  return cfg;
}

void RetrievalConfig::Validate() const {
  if (top_k == 0) throw Error(ErrorCode::kInvalidArgument, "top_k must be positive");
  if (fetch_k < top_k) throw Error(ErrorCode::kInvalidArgument, "fetch_k must be >= top_k");
  if (!(mmr_lambda >= 0.0 && mmr_lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mmr_lambda must lie in [0, 1]");
  }
}

bool RanksBefore(const ScoredChunk& a, const ScoredChunk& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.record->chunk_id < b.record->chunk_id;
}

VectorStore::VectorStore(std::size_t dim, std::string model_id)
    : dim_(dim), model_id_(std::move(model_id)) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "store dim must be positive");
}

VectorStore::VectorStore(VectorStore&& other) noexcept {
  std::unique_lock lock(other.mu_);
  records_ = std::move(other.records_);
  ids_ = std::move(other.ids_);
  dim_ = other.dim_;
  model_id_ = std::move(other.model_id_);
}

VectorStore& VectorStore::operator=(VectorStore&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mu_, other.mu_);
    records_ = std::move(other.records_);
    ids_ = std::move(other.ids_);
    dim_ = other.dim_;
    model_id_ = std::move(other.model_id_);
  }
  return *this;
}

std::size_t VectorStore::AddChunks(std::vector<StoreRecord> records) {
  std::unique_lock lock(mu_);
  std::size_t dim = dim_;
  std::string model_id = model_id_;
  std::unordered_set<std::string> batch_ids;
  for (const auto& r : records) {
    if (r.chunk_id.empty()) throw Error(ErrorCode::kInvalidArgument, "record has an empty chunk_id");
    if (ids_.contains(r.chunk_id) || !batch_ids.insert(r.chunk_id).second) {
      throw Error(ErrorCode::kAlreadyExists, "duplicate chunk_id '" + r.chunk_id + "'");
    }
    if (dim == 0) {
      dim = r.embedding.dim();
      model_id = r.embedding.model_id();
    }
    if (r.embedding.dim() != dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "record '" + r.chunk_id + "' has dim " + std::to_string(r.embedding.dim()) +
                      ", store dim is " + std::to_string(dim));
    }
    if (r.embedding.model_id() != model_id) {
      throw Error(ErrorCode::kModelMismatch, "record '" + r.chunk_id + "' embedded by '" +
                                                 r.embedding.model_id() + "', store uses '" +
                                                 model_id + "'");
    }
  }
  dim_ = dim;
  model_id_ = model_id;
  for (auto& r : records) {
    ids_.insert(r.chunk_id);
    records_.push_back(std::make_shared<const StoreRecord>(std::move(r)));
  }
  return records.size();
}

void VectorStore::CheckQuery(const EmbeddingVector& query) const {
  if (dim_ == 0) return;
  if (query.dim() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "query dim " + std::to_string(query.dim()) +
                                                   " does not match store dim " +
                                                   std::to_string(dim_));
  }
  if (query.model_id() != model_id_) {
    throw Error(ErrorCode::kModelMismatch, "query embedded by '" + query.model_id() +
                                               "', store uses '" + model_id_ + "'");
  }
}

std::vector<ScoredChunk> VectorStore::TopKLocked(const EmbeddingVector& query,
                                                 std::size_t k) const {
  CheckQuery(query);
  std::vector<ScoredChunk> scored;
  scored.reserve(records_.size());
  for (const auto& r : records_) scored.push_back({r, CosineSimilarity(query, r->embedding)});
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    RanksBefore);
  scored.resize(n);
  return scored;
}

std::vector<ScoredChunk> VectorStore::TopKBySimilarity(const EmbeddingVector& query,
                                                       std::size_t k) const {
  std::shared_lock lock(mu_);
  return TopKLocked(query, k);
}

std::vector<ScoredChunk> VectorStore::MmrSelect(const EmbeddingVector& query,
                                                const RetrievalConfig& cfg) const {
  cfg.Validate();
  std::shared_lock lock(mu_);
  std::vector<ScoredChunk> candidates = TopKLocked(query, cfg.fetch_k);
  std::vector<ScoredChunk> selected;
  if (candidates.empty()) return selected;

  const double lambda = cfg.mmr_lambda;
  // redundancy[j]: max similarity of candidate j to anything selected so far
  std::vector<double> redundancy(candidates.size(), -std::numeric_limits<double>::infinity());
  std::vector<bool> taken(candidates.size(), false);
  std::size_t last = 0;
  taken[0] = true;
  selected.push_back(candidates[0]);

  while (selected.size() < cfg.top_k && selected.size() < candidates.size()) {
    std::size_t best = candidates.size();
    double best_objective = 0.0;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (taken[j]) continue;
      redundancy[j] = std::max(redundancy[j], CosineSimilarity(candidates[j].record->embedding,
                                                               candidates[last].record->embedding));
      const double objective = lambda * candidates[j].score - (1.0 - lambda) * redundancy[j];
      if (best == candidates.size() || objective > best_objective ||
          (objective == best_objective &&
           candidates[j].record->chunk_id < candidates[best].record->chunk_id)) {
        best = j;
        best_objective = objective;
      }
    }
    taken[best] = true;
    last = best;
    selected.push_back(candidates[best]);
  }
  return selected;
}

std::vector<ScoredChunk> VectorStore::Retrieve(const EmbeddingVector& query,
                                               const RetrievalConfig& cfg) const {
  if (cfg.strategy == RetrievalStrategy::kMmr) return MmrSelect(query, cfg);
  cfg.Validate();
  return TopKBySimilarity(query, cfg.top_k);
}

std::size_t VectorStore::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::size_t VectorStore::dim() const {
  std::shared_lock lock(mu_);
  return dim_;
}

std::string VectorStore::model_id() const {
  std::shared_lock lock(mu_);
  return model_id_;
}

bool VectorStore::Contains(const std::string& chunk_id) const {
  std::shared_lock lock(mu_);
  return ids_.contains(chunk_id);
}

std::vector<std::shared_ptr<const StoreRecord>> VectorStore::Records() const {
  std::shared_lock lock(mu_);
  return records_;
}

// ---- persistence ----------------------------------------------------------

namespace {

constexpr std::string_view kChecksumPrefix = "fnv1a64:";

std::string FormatDouble(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double ParseDouble(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kCorruptFile, "bad embedding component '" + s + "'");
  }
  return v;
}

[[noreturn]] void Corrupt(const std::filesystem::path& path, const std::string& why) {
  throw Error(ErrorCode::kCorruptFile, "store file " + path.string() + " is corrupt: " + why);
}

}  // namespace

void VectorStore::Persist(const std::filesystem::path& path) const {
  std::shared_lock lock(mu_);
  std::string body;
  for (const auto& r : records_) {
    json embedding = json::array();
    for (double v : r->embedding.values()) embedding.push_back(FormatDouble(v));
    body += json{{"chunk_id", r->chunk_id},
                 {"doc_id", r->doc_id},
                 {"text", r->text},
                 {"embedding", std::move(embedding)}}
                .dump();
    body += '\n';
  }
  const json header{{"format_version", kStoreFormatVersion},
                    {"dim", dim_},
                    {"model_id", model_id_},
                    {"record_count", records_.size()},
                    {"checksum", std::string(kChecksumPrefix) + utf8::ToHex64(utf8::Fnv1a64(body))}};

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << header.dump() << '\n' << body;
    if (!out.flush()) throw Error(ErrorCode::kIoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot replace " + path.string() + ": " + ec.message());
}

VectorStore VectorStore::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "store file " + path.string() + " not found");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();

  const auto nl = content.find('\n');
  if (nl == std::string::npos) Corrupt(path, "missing header line");
  json header;
  try {
    header = json::parse(content.substr(0, nl));
  } catch (const json::exception&) {
    Corrupt(path, "unreadable header");
  }
  if (!header.is_object() || !header.contains("format_version")) {
    Corrupt(path, "header has no format_version");
  }
  const auto& version = header["format_version"];
  if (!version.is_number_integer() || version.get<long long>() != kStoreFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch, "store file " + path.string() + " has format_version " +
                                                 version.dump() + ", expected " +
                                                 std::to_string(kStoreFormatVersion));
  }

  const std::string body = content.substr(nl + 1);
  VectorStore store;
  try {
    const auto checksum = header.at("checksum").get<std::string>();
    if (checksum != std::string(kChecksumPrefix) + utf8::ToHex64(utf8::Fnv1a64(body))) {
      Corrupt(path, "checksum mismatch");
    }
    const auto dim = header.at("dim").get<std::size_t>();
    const auto model_id = header.at("model_id").get<std::string>();
    const auto record_count = header.at("record_count").get<std::size_t>();
    if (dim > 0) store = VectorStore(dim, model_id);

    std::vector<StoreRecord> records;
    std::istringstream lines(body);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      std::vector<double> values;
      for (const auto& s : rec.at("embedding")) values.push_back(ParseDouble(s.get<std::string>()));
      records.push_back(StoreRecord{rec.at("chunk_id").get<std::string>(),
                                    rec.at("doc_id").get<std::string>(),
                                    rec.at("text").get<std::string>(),
                                    EmbeddingVector(std::move(values), model_id)});
    }
    if (records.size() != record_count) {
      Corrupt(path, "header declares " + std::to_string(record_count) + " records, found " +
                        std::to_string(records.size()));
    }
    store.AddChunks(std::move(records));
  } catch (const json::exception& e) {
    Corrupt(path, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptFile) throw;
    Corrupt(path, e.what());
  }
  return store;
}

}  // namespace lexirag
