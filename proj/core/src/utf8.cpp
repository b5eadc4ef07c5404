#include "lexirag/utf8.hpp"

#include <unicode/errorcode.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <cstdio>

#include "lexirag/error.hpp"

namespace lexirag {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kAlreadyExists: return "already_exists";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kModelMismatch: return "model_mismatch";
    case ErrorCode::kZeroNorm: return "zero_norm";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kCorruptFile: return "corrupt_file";
    case ErrorCode::kIoError: return "io_error";
    case ErrorCode::kExternalCommand: return "external_command";
    case ErrorCode::kBackend: return "backend";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kNetwork: return "network";
    case ErrorCode::kScriptExhausted: return "script_exhausted";
    case ErrorCode::kEmptyCorpus: return "empty_corpus";
    case ErrorCode::kParse: return "parse";
  }
  return "unknown";
}

namespace utf8 {
namespace {

[[noreturn]] void Malformed(std::size_t offset) {
  throw Error(ErrorCode::kInvalidArgument,
              "malformed UTF-8 at byte " + std::to_string(offset));
}

}  // namespace

std::u32string Decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    char32_t cp = 0;
    std::size_t len = 0;
    char32_t min = 0;
    if (lead < 0x80) {
      out.push_back(lead);
      ++i;
      continue;
    } else if ((lead & 0xE0) == 0xC0) {
      cp = lead & 0x1F; len = 2; min = 0x80;
    } else if ((lead & 0xF0) == 0xE0) {
      cp = lead & 0x0F; len = 3; min = 0x800;
    } else if ((lead & 0xF8) == 0xF0) {
      cp = lead & 0x07; len = 4; min = 0x10000;
    } else {
      Malformed(i);
    }
    if (i + len > text.size()) Malformed(i);
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) Malformed(i);
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) Malformed(i);
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string Encode(std::u32string_view scalars) {
  std::string out;
  out.reserve(scalars.size());
  for (char32_t cp : scalars) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

std::size_t Length(std::string_view text) { return Decode(text).size(); }

bool IsValid(std::string_view text) {
  try {
    Decode(text);
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::string NormalizeNfc(std::string_view text) {
  // ICU silently replaces bad sequences; reject them first so callers see the
  // same error as everywhere else.
  Decode(text);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::kBackend,
                std::string("ICU NFC unavailable: ") + u_errorName(status));
  }
  const auto src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = nfc->normalize(src, status);
  if (U_FAILURE(status)) {
    throw Error(ErrorCode::kBackend,
                std::string("NFC normalization failed: ") + u_errorName(status));
  }
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

bool IsAsciiSpace(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v';
}

std::uint64_t Fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string ToHex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace utf8
}  // namespace lexirag
