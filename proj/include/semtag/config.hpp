#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "semtag/provider.hpp"

namespace semtag::cli {

enum class BackendKind { Live, Mock, Replay };

std::string_view to_string(BackendKind kind);
std::optional<BackendKind> parse_backend_kind(std::string_view name);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seven chat models with list prices per million tokens. The prices are
/// illustrative; pin real ones in a config file.
std::vector<provider::ModelSpec> default_roster();

/// Small phrase list used by the mock backend for the tag task.
std::map<std::string, std::string> default_mock_lexicon();

struct Config {
  std::vector<provider::ModelSpec> roster = default_roster();
  std::int64_t runs_per_model = 2;
  double temperature = 1.0;
  std::int64_t max_tokens = 8000;
  std::vector<std::string> tags = {"location", "entity", "event", "organization", "date"};
  std::size_t parallelism = 4;
  BackendKind backend = BackendKind::Live;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::filesystem::path fixture_dir;  ///< replay source
  std::filesystem::path record_dir;   ///< when set, live/mock outcomes are recorded here
  std::map<std::string, std::string> mock_lexicon = default_mock_lexicon();
  bool mock_perturb = false;

  /// Throws ConfigError on out-of-range or inconsistent values.
  void validate() const;
};

/// Parses a JSON config document. Omitted fields keep their defaults;
/// unknown fields are rejected. Throws ConfigError.
Config parse_config(std::string_view json_text);

/// Throws ConfigError when the file is missing or invalid.
Config load_config(const std::filesystem::path& path);

/// Backend chain described by a config (recording wraps the base backend).
class BackendStack {
 public:
  explicit BackendStack(const Config& config);

  provider::CompletionBackend& get() { return recorder_ ? *recorder_ : *base_; }

 private:
  std::unique_ptr<provider::CompletionBackend> base_;
  std::unique_ptr<provider::CompletionBackend> recorder_;
};

}  // namespace semtag::cli
