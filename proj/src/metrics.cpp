#include "semtag/metrics.hpp"

#include <algorithm>

#include "semtag/utf8.hpp"

namespace semtag::metrics {
namespace {

constexpr bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

}  // namespace

void BigramProfile::add(Bigram b, std::uint64_t n) {
  if (n == 0) {
    return;
  }
  counts_[b] += n;
  total_ += n;
}

std::uint64_t BigramProfile::count(Bigram b) const {
  const auto it = counts_.find(b);
  return it == counts_.end() ? 0 : it->second;
}

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

BigramProfile bigram_profile(std::string_view text) {
  const std::u32string cps = utf8::decode(text);
  BigramProfile profile;
  for (std::size_t i = 1; i < cps.size(); ++i) {
    profile.add({cps[i - 1], cps[i]});
  }
  return profile;
}

PreservationScore cpr(const BigramProfile& input, const BigramProfile& output) {
  PreservationScore score;
  score.input_total = input.total();

  for (const auto& [bigram, in_count] : input.counts()) {
    const std::uint64_t out_count = output.count(bigram);
    if (in_count > out_count) {
      score.omissions += in_count - out_count;
    } else {
      score.additions += out_count - in_count;
    }
  }
  for (const auto& [bigram, out_count] : output.counts()) {
    if (input.count(bigram) == 0) {
      score.additions += out_count;
    }
  }

  const std::uint64_t s = score.input_total;
  if (s == 0) {
    score.cpr = output.total() == 0 ? 1.0 : 0.0;
    return score;
  }
  const std::uint64_t d = score.difference();
  score.cpr = d >= s ? 0.0 : static_cast<double>(s - d) / static_cast<double>(s);
  return score;
}

PreservationScore preservation(std::string_view input, std::string_view output) {
  return cpr(bigram_profile(normalize(input)), bigram_profile(normalize(output)));
}

}  // namespace semtag::metrics
