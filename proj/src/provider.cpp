#include "semtag/provider.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "semtag/utf8.hpp"

namespace semtag::provider {
namespace {

constexpr std::array kErrorNames = {
    std::pair{ErrorKind::Transport, std::string_view{"transport"}},
    std::pair{ErrorKind::Authentication, std::string_view{"authentication"}},
    std::pair{ErrorKind::Refusal, std::string_view{"refusal"}},
    std::pair{ErrorKind::Rejected, std::string_view{"rejected"}},
    std::pair{ErrorKind::Protocol, std::string_view{"protocol"}},
    std::pair{ErrorKind::MissingFixture, std::string_view{"missing_fixture"}},
    std::pair{ErrorKind::FixtureDrift, std::string_view{"fixture_drift"}},
};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
}

}  // namespace

void RequestParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw std::invalid_argument("temperature must be within [0, 2]");
  }
  if (max_tokens <= 0) {
    throw std::invalid_argument("max_tokens must be positive");
  }
  if (run_index <= 0) {
    throw std::invalid_argument("run_index must be positive");
  }
}

std::string_view to_string(ErrorKind kind) {
  for (const auto& [k, name] : kErrorNames) {
    if (k == kind) {
      return name;
    }
  }
  return "unknown";
}

std::optional<ErrorKind> parse_error_kind(std::string_view name) {
  for (const auto& [k, n] : kErrorNames) {
    if (n == name) {
      return k;
    }
  }
  return std::nullopt;
}

double cost(const Usage& usage, const ModelSpec& model) {
  return static_cast<double>(usage.prompt_tokens) * model.input_price / 1e6 +
         static_cast<double>(usage.completion_tokens) * model.output_price / 1e6;
}

std::string prompt_digest(std::string_view prompt) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(prompt.data(), prompt.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[md[i] >> 4]);
    hex.push_back(kHex[md[i] & 0x0F]);
  }
  return hex;
}

// ---------------------------------------------------------------------------

std::string apply_lexicon(std::string_view text, const std::map<std::string, std::string>& lexicon) {
  std::vector<std::pair<std::string_view, std::string_view>> phrases;
  for (const auto& [phrase, tag] : lexicon) {
    if (!phrase.empty()) {
      phrases.emplace_back(phrase, tag);
    }
  }
  std::stable_sort(phrases.begin(), phrases.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

  std::string out;
  out.reserve(text.size() * 2);
  std::size_t pos = 0;
  while (pos < text.size()) {
    const bool at_boundary = pos == 0 || !is_word_char(static_cast<unsigned char>(text[pos - 1]));
    bool matched = false;
    if (at_boundary) {
      for (const auto& [phrase, tag] : phrases) {
        if (text.substr(pos, phrase.size()) != phrase) {
          continue;
        }
        const std::size_t end = pos + phrase.size();
        if (end < text.size() && is_word_char(static_cast<unsigned char>(text[end]))) {
          continue;
        }
        out.append("<").append(tag).append(">").append(phrase).append("</").append(tag).append(">");
        pos = end;
        matched = true;
        break;
      }
    }
    if (!matched) {
      out.push_back(text[pos++]);
    }
  }
  return out;
}

std::uint64_t MockBackend::mock_tokens(std::string_view text) { return (utf8::length(text) + 3) / 4; }

CompletionResult MockBackend::complete(const ModelSpec& model, const RequestParams& params,
                                       const CompletionRequest& request) {
  params.validate();
  if (request.body.empty()) {
    throw ProviderError(ErrorKind::Rejected, "empty prompt body");
  }

  std::string text = request.body;
  if (options_.perturb) {
    std::u32string cps = utf8::decode(text);
    std::uint64_t h = fnv1a(model.name + "#" + std::to_string(params.run_index));
    const std::size_t drops = h % 4;
    for (std::size_t i = 0; i < drops && !cps.empty(); ++i) {
      h = h * 6364136223846793005ULL + 1442695040888963407ULL;
      cps.erase(cps.begin() + static_cast<std::ptrdiff_t>((h >> 33) % cps.size()));
    }
    text = utf8::encode(cps);
  }
  if (request.task == "tag" && !options_.lexicon.empty()) {
    text = apply_lexicon(text, options_.lexicon);
  }

  CompletionResult result;
  result.usage = {mock_tokens(request.prompt()), mock_tokens(text)};
  result.model = model.name;
  if (result.usage.completion_tokens > static_cast<std::uint64_t>(params.max_tokens)) {
    text = utf8::encode(utf8::decode(text).substr(0, static_cast<std::size_t>(params.max_tokens) * 4));
    result.usage.completion_tokens = static_cast<std::uint64_t>(params.max_tokens);
    result.truncated = true;
  }
  result.text = std::move(text);
  return result;
}

// ---------------------------------------------------------------------------

std::string fixture_stem(std::string_view doc_id, std::string_view task, std::string_view model,
                         std::int64_t run_index) {
  std::string stem;
  stem.append(doc_id).append(".").append(task).append(".").append(model).append(".");
  stem += std::to_string(run_index);
  return stem;
}

void write_fixture(const std::filesystem::path& dir, std::string_view stem, const Fixture& fixture) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["prompt_tokens"] = fixture.usage.prompt_tokens;
  meta["completion_tokens"] = fixture.usage.completion_tokens;
  meta["latency_ms"] = fixture.latency_ms;
  meta["prompt_digest"] = fixture.prompt_digest;
  meta["truncated"] = fixture.truncated;
  meta["failure"] = fixture.failure ? nlohmann::json(to_string(*fixture.failure)) : nlohmann::json(nullptr);
  write_file(dir / (std::string(stem) + ".txt"), fixture.text);
  write_file(dir / (std::string(stem) + ".meta.json"), meta.dump(2) + "\n");
}

std::optional<Fixture> read_fixture(const std::filesystem::path& dir, std::string_view stem) {
  const auto meta_path = dir / (std::string(stem) + ".meta.json");
  const auto text_path = dir / (std::string(stem) + ".txt");
  if (!std::filesystem::exists(meta_path)) {
    return std::nullopt;
  }
  Fixture fixture;
  try {
    const auto meta = nlohmann::json::parse(read_file(meta_path));
    fixture.usage.prompt_tokens = meta.value("prompt_tokens", std::uint64_t{0});
    fixture.usage.completion_tokens = meta.value("completion_tokens", std::uint64_t{0});
    fixture.latency_ms = meta.value("latency_ms", 0.0);
    fixture.prompt_digest = meta.value("prompt_digest", std::string{});
    fixture.truncated = meta.value("truncated", false);
    if (meta.contains("failure") && meta["failure"].is_string()) {
      const auto name = meta["failure"].get<std::string>();
      fixture.failure = parse_error_kind(name).value_or(ErrorKind::Protocol);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(ErrorKind::Protocol, "corrupt fixture metadata " + meta_path.string() + ": " + e.what());
  }
  if (!fixture.failure) {
    if (!std::filesystem::exists(text_path)) {
      return std::nullopt;
    }
    fixture.text = read_file(text_path);
  }
  return fixture;
}

CompletionResult ReplayBackend::complete(const ModelSpec& model, const RequestParams& params,
                                         const CompletionRequest& request) {
  const std::string stem = fixture_stem(request.doc_id, request.task, model.name, params.run_index);
  auto fixture = read_fixture(dir_, stem);
  if (!fixture) {
    throw ProviderError(ErrorKind::MissingFixture, "no fixture " + stem + " in " + dir_.string());
  }
  if (fixture->failure) {
    throw ProviderError(*fixture->failure, "recorded failure for " + stem);
  }
  if (!fixture->prompt_digest.empty() && fixture->prompt_digest != prompt_digest(request.prompt())) {
    throw ProviderError(ErrorKind::FixtureDrift, "prompt changed since fixture " + stem + " was recorded");
  }
  return {std::move(fixture->text), fixture->usage, fixture->latency_ms, model.name, fixture->truncated};
}

RecordingBackend::RecordingBackend(CompletionBackend& inner, std::filesystem::path dir)
    : inner_(inner), dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

CompletionResult RecordingBackend::complete(const ModelSpec& model, const RequestParams& params,
                                            const CompletionRequest& request) {
  const std::string stem = fixture_stem(request.doc_id, request.task, model.name, params.run_index);
  Fixture fixture;
  fixture.prompt_digest = prompt_digest(request.prompt());
  try {
    CompletionResult result = inner_.complete(model, params, request);
    fixture.text = result.text;
    fixture.usage = result.usage;
    fixture.latency_ms = result.latency_ms;
    fixture.truncated = result.truncated;
    write_fixture(dir_, stem, fixture);
    return result;
  } catch (const ProviderError& e) {
    fixture.failure = e.kind();
    write_fixture(dir_, stem, fixture);
    throw;
  }
}

}  // namespace semtag::provider
