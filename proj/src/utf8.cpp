#include "semtag/utf8.hpp"

namespace semtag::utf8 {
namespace {

// Decodes the sequence starting at text[pos]. Returns the code point and
// advances pos; invalid input yields kReplacement and consumes one byte
// (or the maximal valid prefix of a truncated sequence).
char32_t next(std::string_view text, std::size_t& pos, bool& valid) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  const unsigned char lead = byte(pos);
  valid = true;
  if (lead < 0x80) {
    ++pos;
    return lead;
  }

  std::size_t need = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if (lead >= 0xC2 && lead <= 0xDF) {
    need = 1, cp = lead & 0x1F, min = 0x80;
  } else if (lead >= 0xE0 && lead <= 0xEF) {
    need = 2, cp = lead & 0x0F, min = 0x800;
  } else if (lead >= 0xF0 && lead <= 0xF4) {
    need = 3, cp = lead & 0x07, min = 0x10000;
  } else {
    ++pos;
    valid = false;
    return kReplacement;
  }

  std::size_t i = pos + 1;
  for (std::size_t k = 0; k < need; ++k, ++i) {
    if (i >= text.size() || (byte(i) & 0xC0) != 0x80) {
      pos = i;
      valid = false;
      return kReplacement;
    }
    cp = (cp << 6) | (byte(i) & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    pos = i;
    valid = false;
    return kReplacement;
  }
  pos = i;
  return cp;
}

}  // namespace

std::u32string decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  bool valid = true;
  for (std::size_t pos = 0; pos < text.size();) {
    out.push_back(next(text, pos, valid));
  }
  return out;
}

void append(std::string& out, char32_t cp) {
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    cp = kReplacement;
  }
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

std::string encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    append(out, cp);
  }
  return out;
}

Repaired repair(std::string_view text) {
  Repaired result;
  result.text.reserve(text.size());
  bool valid = true;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t start = pos;
    const char32_t cp = next(text, pos, valid);
    if (valid) {
      result.text.append(text.substr(start, pos - start));
    } else {
      append(result.text, cp);
      ++result.replaced;
    }
  }
  return result;
}

std::size_t length(std::string_view text) {
  std::size_t n = 0;
  bool valid = true;
  for (std::size_t pos = 0; pos < text.size(); ++n) {
    next(text, pos, valid);
  }
  return n;
}

std::size_t byte_offset(std::string_view text, std::size_t chars) {
  std::size_t pos = 0;
  bool valid = true;
  for (; chars > 0 && pos < text.size(); --chars) {
    next(text, pos, valid);
  }
  return pos;
}

}  // namespace semtag::utf8
