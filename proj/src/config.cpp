#include "semtag/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "semtag/tagparser.hpp"

namespace semtag::cli {
namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "models",   "runs_per_model", "temperature", "max_tokens",   "tags",         "parallelism",
    "backend",  "endpoint",       "fixture_dir", "record_dir",   "mock_lexicon", "mock_perturb",
};

}  // namespace

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Live:
      return "live";
    case BackendKind::Mock:
      return "mock";
    case BackendKind::Replay:
      return "replay";
  }
  return "live";
}

std::optional<BackendKind> parse_backend_kind(std::string_view name) {
  for (auto kind : {BackendKind::Live, BackendKind::Mock, BackendKind::Replay}) {
    if (to_string(kind) == name) {
      return kind;
    }
  }
  return std::nullopt;
}

std::vector<provider::ModelSpec> default_roster() {
  return {
      {"gpt-4.1", 2.00, 8.00},      {"gpt-4.1-mini", 0.40, 1.60}, {"gpt-4.1-nano", 0.10, 0.40},
      {"gpt-4o", 2.50, 10.00},      {"gpt-5-mini", 0.25, 2.00},   {"gpt-5-nano", 0.05, 0.40},
      {"gpt-5.1", 1.25, 10.00},
  };
}

std::map<std::string, std::string> default_mock_lexicon() {
  return {
      {"Security Council", "organization"},
      {"United Nations", "organization"},
      {"General Assembly", "organization"},
      {"Secretary-General", "entity"},
      {"Member States", "entity"},
      {"Iran", "location"},
      {"Indonesia", "location"},
      {"Palestine", "location"},
      {"Kashmir", "location"},
      {"Greece", "location"},
      {"cease-fire", "event"},
      {"armistice", "event"},
  };
}

void Config::validate() const {
  if (roster.empty()) {
    throw ConfigError("models: roster is empty");
  }
  std::set<std::string> names;
  for (const auto& model : roster) {
    if (model.name.empty()) {
      throw ConfigError("models: empty model name");
    }
    if (!names.insert(model.name).second) {
      throw ConfigError("models: duplicate model '" + model.name + "'");
    }
    if (model.input_price < 0 || model.output_price < 0) {
      throw ConfigError("models: negative price for '" + model.name + "'");
    }
  }
  if (runs_per_model <= 0) {
    throw ConfigError("runs_per_model must be positive");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ConfigError("temperature must be within [0, 2]");
  }
  if (max_tokens <= 0) {
    throw ConfigError("max_tokens must be positive");
  }
  if (parallelism == 0) {
    throw ConfigError("parallelism must be positive");
  }
  try {
    tags::TagVocabulary vocab(tags);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("tags: ") + e.what());
  }
  if (backend == BackendKind::Replay && fixture_dir.empty()) {
    throw ConfigError("backend 'replay' needs fixture_dir");
  }
}

Config parse_config(std::string_view json_text) {
  Config config;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  // Keys starting with '_' are comments.
  for (const auto& [key, value] : doc.items()) {
    if (!key.starts_with('_') && kKnownKeys.count(key) == 0) {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }

  try {
    if (doc.contains("models")) {
      config.roster.clear();
      for (const auto& m : doc.at("models")) {
        config.roster.push_back({m.at("name").get<std::string>(), m.value("input_price", 0.0),
                                 m.value("output_price", 0.0)});
      }
    }
    config.runs_per_model = doc.value("runs_per_model", config.runs_per_model);
    config.temperature = doc.value("temperature", config.temperature);
    config.max_tokens = doc.value("max_tokens", config.max_tokens);
    config.tags = doc.value("tags", config.tags);
    if (doc.contains("parallelism")) {
      const auto p = doc.at("parallelism").get<std::int64_t>();
      if (p <= 0) {
        throw ConfigError("parallelism must be positive");
      }
      config.parallelism = static_cast<std::size_t>(p);
    }
    if (doc.contains("backend")) {
      const auto name = doc.at("backend").get<std::string>();
      const auto kind = parse_backend_kind(name);
      if (!kind) {
        throw ConfigError("unknown backend '" + name + "'");
      }
      config.backend = *kind;
    }
    config.endpoint = doc.value("endpoint", config.endpoint);
    config.fixture_dir = doc.value("fixture_dir", config.fixture_dir.string());
    config.record_dir = doc.value("record_dir", config.record_dir.string());
    if (doc.contains("mock_lexicon")) {
      config.mock_lexicon = doc.at("mock_lexicon").get<std::map<std::string, std::string>>();
    }
    config.mock_perturb = doc.value("mock_perturb", config.mock_perturb);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  config.validate();
  return config;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot read config file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  Config config = parse_config(buffer.str());
  // Relative directories resolve against the config file's location.
  const auto base = path.parent_path();
  if (!config.fixture_dir.empty() && config.fixture_dir.is_relative()) {
    config.fixture_dir = base / config.fixture_dir;
  }
  if (!config.record_dir.empty() && config.record_dir.is_relative()) {
    config.record_dir = base / config.record_dir;
  }
  return config;
}

BackendStack::BackendStack(const Config& config) {
  switch (config.backend) {
    case BackendKind::Live: {
      auto options = provider::LiveOptions::from_environment();
      options.endpoint = config.endpoint;
      base_ = std::make_unique<provider::LiveBackend>(std::move(options));
      break;
    }
    case BackendKind::Mock:
      base_ = std::make_unique<provider::MockBackend>(provider::MockOptions{config.mock_lexicon, config.mock_perturb});
      break;
    case BackendKind::Replay:
      base_ = std::make_unique<provider::ReplayBackend>(config.fixture_dir);
      break;
  }
  if (!config.record_dir.empty() && config.backend != BackendKind::Replay) {
    recorder_ = std::make_unique<provider::RecordingBackend>(*base_, config.record_dir);
  }
}

}  // namespace semtag::cli
