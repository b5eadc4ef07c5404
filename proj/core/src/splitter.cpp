#include <deque>

#include "lexirag/corpus_ingest.hpp"
#include "lexirag/error.hpp"
#include "lexirag/utf8.hpp"

namespace lexirag {

void ChunkConfig::Validate() const {
  if (chunk_size == 0) throw Error(ErrorCode::kInvalidArgument, "chunk_size must be positive");
  if (chunk_overlap >= chunk_size) {
    throw Error(ErrorCode::kInvalidArgument, "chunk_overlap must be smaller than chunk_size");
  }
  if (separators.empty() || !separators.back().empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "separators must end with the empty string (character fallback)");
  }
  for (const auto& s : separators) {
    if (!utf8::IsValid(s)) throw Error(ErrorCode::kInvalidArgument, "separator is not valid UTF-8");
  }
}

namespace {

class RecursiveSplitter {
 public:
  RecursiveSplitter(const std::u32string& text, const ChunkConfig& cfg)
      : text_(text), size_(cfg.chunk_size) {
    for (const auto& s : cfg.separators) separators_.push_back(utf8::Decode(s));
  }

  // Cuts [begin, end) into contiguous pieces of at most chunk_size scalars.
  void Cut(std::size_t begin, std::size_t end, std::size_t first_sep,
           std::vector<CharSpan>& pieces) const {
    const std::u32string_view view(text_.data() + begin, end - begin);
    std::size_t chosen = first_sep;
    while (chosen < separators_.size() && !separators_[chosen].empty() &&
           view.find(separators_[chosen]) == std::u32string_view::npos) {
      ++chosen;
    }
    const std::u32string& sep = separators_[chosen];

    std::vector<std::size_t> starts{begin};
    if (sep.empty()) {
      for (std::size_t i = begin + 1; i < end; ++i) starts.push_back(i);
    } else {
      for (auto pos = view.find(sep); pos != std::u32string_view::npos;
           pos = view.find(sep, pos + sep.size())) {
        if (begin + pos != starts.back()) starts.push_back(begin + pos);
      }
    }
    starts.push_back(end);

    for (std::size_t k = 0; k + 1 < starts.size(); ++k) {
      const CharSpan piece{starts[k], starts[k + 1]};
      if (piece.end - piece.start <= size_) {
        pieces.push_back(piece);
      } else {
        Cut(piece.start, piece.end, chosen + 1, pieces);
      }
    }
  }

 private:
  const std::u32string& text_;
  std::size_t size_;
  std::vector<std::u32string> separators_;
};

std::vector<CharSpan> Merge(const std::vector<CharSpan>& pieces, std::size_t size,
                            std::size_t overlap) {
  std::vector<CharSpan> out;
  std::deque<CharSpan> window;
  std::size_t total = 0;
  for (const auto& piece : pieces) {
    const std::size_t len = piece.end - piece.start;
    if (total + len > size && !window.empty()) {
      out.push_back({window.front().start, window.back().end});
      while (total > overlap || (total > 0 && total + len > size)) {
        total -= window.front().end - window.front().start;
        window.pop_front();
      }
    }
    window.push_back(piece);
    total += len;
  }
  if (!window.empty()) out.push_back({window.front().start, window.back().end});
  return out;
}

}  // namespace

std::vector<ChunkDraft> SplitText(std::string_view text, const ChunkConfig& cfg) {
  cfg.Validate();
  const std::u32string scalars = utf8::Decode(text);
  if (scalars.empty()) return {};

  std::vector<CharSpan> pieces;
  RecursiveSplitter(scalars, cfg).Cut(0, scalars.size(), 0, pieces);

  std::vector<ChunkDraft> drafts;
  for (CharSpan span : Merge(pieces, cfg.chunk_size, cfg.chunk_overlap)) {
    while (span.start < span.end && utf8::IsAsciiSpace(scalars[span.start])) ++span.start;
    while (span.end > span.start && utf8::IsAsciiSpace(scalars[span.end - 1])) --span.end;
    if (span.start == span.end) continue;
    drafts.push_back(
        {utf8::Encode(std::u32string_view(scalars).substr(span.start, span.end - span.start)),
         span});
  }
  return drafts;
}

}  // namespace lexirag
