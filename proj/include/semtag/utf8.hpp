#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace semtag::utf8 {

inline constexpr char32_t kReplacement = U'�';

/// Decodes UTF-8 into code points. Each invalid or truncated sequence
/// becomes one U+FFFD.
std::u32string decode(std::string_view text);

/// Encodes one code point (surrogates and out-of-range values as U+FFFD).
void append(std::string& out, char32_t cp);

std::string encode(std::u32string_view text);

struct Repaired {
  std::string text;
  std::size_t replaced = 0;
};

/// Re-encodes text as valid UTF-8, counting replaced sequences.
Repaired repair(std::string_view text);

/// Number of code points (invalid sequences count one each).
std::size_t length(std::string_view text);

/// Byte offset of the code point at index `chars` (or text.size()).
std::size_t byte_offset(std::string_view text, std::size_t chars);

}  // namespace semtag::utf8
