#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>

namespace semtag::metrics {

/// Ordered pair of adjacent code points.
struct Bigram {
  char32_t first = 0;
  char32_t second = 0;

  friend bool operator==(const Bigram&, const Bigram&) = default;
};

struct BigramHash {
  std::size_t operator()(const Bigram& b) const noexcept {
    const std::uint64_t key = (std::uint64_t{b.first} << 32) | b.second;
    return std::hash<std::uint64_t>{}(key * 0x9E3779B97F4A7C15ULL);
  }
};

/// Multiset of character bigrams. Absent bigrams have count zero; no entry
/// is ever stored with a zero count.
class BigramProfile {
 public:
  using Counts = std::unordered_map<Bigram, std::uint64_t, BigramHash>;

  BigramProfile() = default;

  void add(Bigram b, std::uint64_t n = 1);

  std::uint64_t count(Bigram b) const;
  std::uint64_t total() const { return total_; }
  std::size_t distinct() const { return counts_.size(); }
  const Counts& counts() const { return counts_; }

 private:
  Counts counts_;
  std::uint64_t total_ = 0;
};

/// Outcome of comparing an input profile against an output profile.
struct PreservationScore {
  double cpr = 1.0;                  ///< clamp((S - D) / S, 0, 1)
  std::uint64_t input_total = 0;     ///< S
  std::uint64_t omissions = 0;       ///< sum of max(c_in - c_out, 0)
  std::uint64_t additions = 0;       ///< sum of max(c_out - c_in, 0)

  std::uint64_t difference() const { return omissions + additions; }  ///< D
};

/// Collapses every run of ASCII whitespace (space, tab, CR, LF, VT, FF) to
/// a single space and trims both ends. Everything else is kept verbatim.
std::string normalize(std::string_view text);

/// Counts bigrams over code points of already-normalized UTF-8 text.
BigramProfile bigram_profile(std::string_view text);

/// Content preservation ratio. With S the input bigram total and D the
/// summed absolute count difference, the ratio is (S - D) / S clamped to
/// [0, 1]. The inverted orientation S / (S - D) would exceed 1 for any
/// imperfect output, so it is not used. An empty input scores 1 against an
/// empty output and 0 otherwise.
PreservationScore cpr(const BigramProfile& input, const BigramProfile& output);

/// normalize + bigram_profile on both sides, then cpr.
PreservationScore preservation(std::string_view input, std::string_view output);

}  // namespace semtag::metrics
