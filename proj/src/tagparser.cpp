#include "semtag/tagparser.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "semtag/utf8.hpp"

namespace semtag::tags {
namespace {

constexpr bool is_lower_alpha(char c) { return c >= 'a' && c <= 'z'; }
constexpr bool is_alpha(char c) { return is_lower_alpha(c) || (c >= 'A' && c <= 'Z'); }

}  // namespace

TagVocabulary::TagVocabulary(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string_view> seen;
  for (const auto& name : names_) {
    if (name.empty() || !std::all_of(name.begin(), name.end(), is_lower_alpha)) {
      throw std::invalid_argument("invalid tag name '" + name + "'");
    }
    if (!seen.insert(name).second) {
      throw std::invalid_argument("duplicate tag name '" + name + "'");
    }
  }
}

TagVocabulary TagVocabulary::standard() {
  return TagVocabulary{"location", "entity", "event", "organization", "date"};
}

bool TagVocabulary::contains(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::string TagToken::source() const {
  switch (kind) {
    case Kind::Open:
      return "<" + value + ">";
    case Kind::Close:
      return "</" + value + ">";
    case Kind::Text:
      break;
  }
  return value;
}

std::vector<TagToken> tokenize(std::string_view text, const TagVocabulary& vocab) {
  std::vector<TagToken> tokens;
  std::size_t text_start = 0;

  const auto flush_text = [&](std::size_t until) {
    if (until > text_start) {
      tokens.push_back({TagToken::Kind::Text, std::string(text.substr(text_start, until - text_start)),
                        text_start});
    }
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    if (text[pos] != '<') {
      ++pos;
      continue;
    }
    std::size_t i = pos + 1;
    const bool closing = i < text.size() && text[i] == '/';
    if (closing) {
      ++i;
    }
    const std::size_t name_start = i;
    while (i < text.size() && is_alpha(text[i])) {
      ++i;
    }
    const std::string_view name = text.substr(name_start, i - name_start);
    if (i < text.size() && text[i] == '>' && !name.empty() && vocab.contains(name)) {
      flush_text(pos);
      tokens.push_back({closing ? TagToken::Kind::Close : TagToken::Kind::Open, std::string(name), pos});
      pos = i + 1;
      text_start = pos;
    } else {
      ++pos;
    }
  }
  flush_text(text.size());
  return tokens;
}

TagAudit audit(const std::vector<TagToken>& tokens) {
  struct Open {
    std::string name;
    std::size_t byte_start;
    std::size_t char_start;
    std::size_t depth;
    std::size_t order;
  };

  TagAudit result;
  std::vector<Open> stack;
  std::vector<std::pair<std::size_t, Annotation>> closed;
  std::string stripped;
  std::size_t stripped_chars = 0;
  std::size_t opened = 0;

  for (const auto& token : tokens) {
    switch (token.kind) {
      case TagToken::Kind::Text:
        stripped += token.value;
        stripped_chars += utf8::length(token.value);
        break;
      case TagToken::Kind::Open:
        stack.push_back({token.value, stripped.size(), stripped_chars, stack.size(), opened++});
        break;
      case TagToken::Kind::Close:
        if (stack.empty() || stack.back().name != token.value) {
          ++result.n_malformed;
          break;
        }
        {
          Open top = std::move(stack.back());
          stack.pop_back();
          ++result.n_pairs;
          ++result.per_tag_pairs[top.name];
          closed.emplace_back(top.order,
                              Annotation{top.name, stripped.substr(top.byte_start), top.char_start,
                                         stripped_chars, top.depth});
        }
        break;
    }
  }
  result.n_malformed += stack.size();

  std::sort(closed.begin(), closed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  result.annotations.reserve(closed.size());
  for (auto& [order, annotation] : closed) {
    result.annotations.push_back(std::move(annotation));
  }
  return result;
}

double twf(const TagAudit& audit) {
  const std::size_t events = audit.n_pairs + audit.n_malformed;
  if (events == 0) {
    return 1.0;
  }
  return static_cast<double>(audit.n_pairs) / static_cast<double>(events);
}

std::size_t n_tags(const TagAudit& audit) { return audit.n_pairs; }

std::string strip_tags(std::string_view text, const TagVocabulary& vocab) {
  std::string out;
  out.reserve(text.size());
  for (const auto& token : tokenize(text, vocab)) {
    if (token.kind == TagToken::Kind::Text) {
      out += token.value;
    }
  }
  return out;
}

std::string insert_tags(std::string_view stripped, const std::vector<Annotation>& annotations) {
  std::string out;
  std::size_t cursor_chars = 0;
  std::size_t cursor_bytes = 0;

  const auto copy_until = [&](std::size_t char_pos) {
    if (char_pos <= cursor_chars) {
      return;
    }
    const std::size_t n = utf8::byte_offset(stripped.substr(cursor_bytes), char_pos - cursor_chars);
    out.append(stripped.substr(cursor_bytes, n));
    cursor_bytes += n;
    cursor_chars = char_pos;
  };

  std::vector<const Annotation*> stack;
  const auto close_top = [&] {
    copy_until(stack.back()->end);
    out += "</" + stack.back()->tag + ">";
    stack.pop_back();
  };

  for (const auto& annotation : annotations) {
    while (stack.size() > annotation.depth) {
      close_top();
    }
    copy_until(annotation.start);
    out += "<" + annotation.tag + ">";
    stack.push_back(&annotation);
  }
  while (!stack.empty()) {
    close_top();
  }
  out.append(stripped.substr(cursor_bytes));
  return out;
}

}  // namespace semtag::tags
