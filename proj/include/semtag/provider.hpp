#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace semtag::provider {

struct ModelSpec {
  std::string name;
  double input_price = 0.0;   ///< currency per million prompt tokens
  double output_price = 0.0;  ///< currency per million completion tokens
};

struct RequestParams {
  double temperature = 1.0;
  std::int64_t max_tokens = 8000;
  std::int64_t run_index = 1;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct Usage {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;

  friend bool operator==(const Usage&, const Usage&) = default;
};

/// What is being asked, plus the identity used to key recorded fixtures.
struct CompletionRequest {
  std::string doc_id;
  std::string task;  ///< "clean" or "tag"
  std::string instruction;
  std::string body;

  /// instruction + two line breaks + body; the exact text sent.
  std::string prompt() const { return instruction + "\n\n" + body; }
};

struct CompletionResult {
  std::string text;
  Usage usage;
  double latency_ms = 0.0;
  std::string model;
  bool truncated = false;  ///< the backend stopped at the token limit

  friend bool operator==(const CompletionResult&, const CompletionResult&) = default;
};

enum class ErrorKind {
  Transport,
  Authentication,
  Refusal,
  Rejected,
  Protocol,
  MissingFixture,
  FixtureDrift,
};

std::string_view to_string(ErrorKind kind);
std::optional<ErrorKind> parse_error_kind(std::string_view name);

class ProviderError : public std::runtime_error {
 public:
  ProviderError(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// prompt_tokens * input_price / 1e6 + completion_tokens * output_price / 1e6
double cost(const Usage& usage, const ModelSpec& model);

/// Hex SHA-256 of the full prompt string.
std::string prompt_digest(std::string_view prompt);

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;

  /// Must be safe to call concurrently. Truncation is reported through
  /// CompletionResult::truncated; every other failure throws ProviderError.
  virtual CompletionResult complete(const ModelSpec& model, const RequestParams& params,
                                    const CompletionRequest& request) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic mock

struct MockOptions {
  /// Phrase -> tag name. For "tag" requests every non-overlapping
  /// occurrence (longest phrase first, left to right) is wrapped in tags.
  std::map<std::string, std::string> lexicon;
  /// Drop a few characters, chosen from a hash of (model, run), so
  /// candidates differ in a reproducible way.
  bool perturb = false;
};

/// Echoes the request body (optionally tagged or perturbed). Usage comes
/// from a fixed tokenizer of ceil(code points / 4); latency is always 0.
class MockBackend final : public CompletionBackend {
 public:
  explicit MockBackend(MockOptions options = {}) : options_(std::move(options)) {}

  CompletionResult complete(const ModelSpec& model, const RequestParams& params,
                            const CompletionRequest& request) override;

  static std::uint64_t mock_tokens(std::string_view text);

 private:
  MockOptions options_;
};

/// Wraps lexicon phrases found in text with their tags.
std::string apply_lexicon(std::string_view text, const std::map<std::string, std::string>& lexicon);

// ---------------------------------------------------------------------------
// Fixture store

/// `<doc_id>.<task>.<model>.<run_index>`; the output lives in `<stem>.txt`
/// and metadata in `<stem>.meta.json`.
std::string fixture_stem(std::string_view doc_id, std::string_view task, std::string_view model,
                         std::int64_t run_index);

struct Fixture {
  std::string text;
  Usage usage;
  double latency_ms = 0.0;
  std::string prompt_digest;  ///< empty disables drift checking
  bool truncated = false;
  std::optional<ErrorKind> failure;
};

void write_fixture(const std::filesystem::path& dir, std::string_view stem, const Fixture& fixture);
std::optional<Fixture> read_fixture(const std::filesystem::path& dir, std::string_view stem);

/// Serves recorded fixtures verbatim. Missing fixtures and prompt-digest
/// mismatches are errors; recorded failures are rethrown.
class ReplayBackend final : public CompletionBackend {
 public:
  explicit ReplayBackend(std::filesystem::path dir) : dir_(std::move(dir)) {}

  CompletionResult complete(const ModelSpec& model, const RequestParams& params,
                            const CompletionRequest& request) override;

 private:
  std::filesystem::path dir_;
};

/// Forwards to another backend and records every outcome as a fixture.
class RecordingBackend final : public CompletionBackend {
 public:
  RecordingBackend(CompletionBackend& inner, std::filesystem::path dir);

  CompletionResult complete(const ModelSpec& model, const RequestParams& params,
                            const CompletionRequest& request) override;

 private:
  CompletionBackend& inner_;
  std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Live HTTP backend

struct LiveOptions {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::seconds timeout{300};
  /// Replaceable for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;

  /// Reads the key from SEMTAG_API_KEY.
  static LiveOptions from_environment();
};

/// Chat-completion client. Transport errors, HTTP 408/429 and 5xx are
/// retried with exponential backoff; 401/403 are authentication errors.
class LiveBackend final : public CompletionBackend {
 public:
  explicit LiveBackend(LiveOptions options);

  CompletionResult complete(const ModelSpec& model, const RequestParams& params,
                            const CompletionRequest& request) override;

 private:
  LiveOptions options_;
  std::string base_url_;
  std::string path_;
};

inline constexpr const char* kApiKeyVariable = "SEMTAG_API_KEY";

}  // namespace semtag::provider
