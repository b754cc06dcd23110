#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace semtag::tags {

/// Closed set of recognized tag names. Anything outside the set that looks
/// like markup is treated as literal text.
class TagVocabulary {
 public:
  /// Throws std::invalid_argument unless every name is a non-empty run of
  /// lowercase ASCII letters and names are unique.
  explicit TagVocabulary(std::vector<std::string> names);
  TagVocabulary(std::initializer_list<std::string> names)
      : TagVocabulary(std::vector<std::string>(names)) {}

  /// location, entity, event, organization, date
  static TagVocabulary standard();

  bool contains(std::string_view name) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

struct TagToken {
  enum class Kind { Open, Close, Text };

  Kind kind = Kind::Text;
  std::string value;        ///< tag name, or literal text for Text tokens
  std::size_t offset = 0;   ///< byte offset of the token in the source

  /// Exact source bytes this token covers.
  std::string source() const;
  std::size_t length() const { return source().size(); }

  friend bool operator==(const TagToken&, const TagToken&) = default;
};

/// Splits text into tag and text tokens. Only `<name>` and `</name>` with a
/// vocabulary name (no attributes, no whitespace) are tags. Adjacent
/// non-tag characters are merged into one Text token, so the token sources
/// concatenated in order reproduce the input.
std::vector<TagToken> tokenize(std::string_view text, const TagVocabulary& vocab);

struct Annotation {
  std::string tag;
  std::string text;        ///< enclosed text with all tags removed
  std::size_t start = 0;   ///< code point offsets into the tag-stripped text
  std::size_t end = 0;
  std::size_t depth = 0;   ///< open tags on the stack when this one opened

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct TagAudit {
  std::size_t n_pairs = 0;
  std::size_t n_malformed = 0;
  std::map<std::string, std::size_t> per_tag_pairs;
  std::vector<Annotation> annotations;  ///< in opening order
};

/// Stack match of open and close tokens. A closer that matches the top of
/// the stack forms a pair; any other closer is malformed and leaves the
/// stack untouched. Openers still on the stack at the end are malformed.
TagAudit audit(const std::vector<TagToken>& tokens);

/// pairs / (pairs + malformed); 1 when there are no tag events at all.
double twf(const TagAudit& audit);

/// Number of well-formed pairs.
std::size_t n_tags(const TagAudit& audit);

std::string strip_tags(std::string_view text, const TagVocabulary& vocab);

/// Rebuilds tagged text from stripped text and its annotations. Inverse of
/// strip_tags for text whose audit has no malformed tags.
std::string insert_tags(std::string_view stripped, const std::vector<Annotation>& annotations);

}  // namespace semtag::tags
