#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace lexirag::utf8 {

/// Decodes strict UTF-8 into Unicode scalar values. Throws Error(kInvalidArgument)
/// on malformed input, overlong forms, surrogates or out-of-range values.
std::u32string Decode(std::string_view text);

std::string Encode(std::u32string_view scalars);

/// Number of scalar values; same validation as Decode.
std::size_t Length(std::string_view text);

bool IsValid(std::string_view text);

/// NFC-normalizes UTF-8 text.
std::string NormalizeNfc(std::string_view text);

bool IsAsciiSpace(char32_t c);

/// 64-bit FNV-1a over raw bytes, starting from `basis`.
std::uint64_t Fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::string ToHex64(std::uint64_t value);

}  // namespace lexirag::utf8
