#include <chrono>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "semtag/provider.hpp"

namespace semtag::provider {
namespace {

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

struct Attempt {
  std::optional<CompletionResult> result;
  std::optional<ProviderError> error;
  bool retry = false;
};

CompletionResult parse_completion(const std::string& body, const std::string& model) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(ErrorKind::Protocol, std::string("unparseable response: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    throw ProviderError(ErrorKind::Protocol, "response has no choices");
  }
  const auto& choice = doc["choices"][0];
  const auto& message = choice.value("message", nlohmann::json::object());
  if (message.contains("refusal") && message["refusal"].is_string()) {
    throw ProviderError(ErrorKind::Refusal, "model refused: " + message["refusal"].get<std::string>());
  }
  const std::string finish = choice.value("finish_reason", std::string{});
  if (finish == "content_filter") {
    throw ProviderError(ErrorKind::Refusal, "response blocked by content filter");
  }

  CompletionResult result;
  result.model = model;
  if (message.contains("content") && message["content"].is_string()) {
    result.text = message["content"].get<std::string>();
  }
  result.truncated = finish == "length";
  if (doc.contains("usage") && doc["usage"].is_object()) {
    result.usage.prompt_tokens = doc["usage"].value("prompt_tokens", std::uint64_t{0});
    result.usage.completion_tokens = doc["usage"].value("completion_tokens", std::uint64_t{0});
  }
  return result;
}

}  // namespace

LiveOptions LiveOptions::from_environment() {
  LiveOptions options;
  if (const char* key = std::getenv(kApiKeyVariable)) {
    options.api_key = key;
  }
  return options;
}

LiveBackend::LiveBackend(LiveOptions options) : options_(std::move(options)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch match;
  if (!std::regex_match(options_.endpoint, match, kUrl)) {
    throw std::invalid_argument("invalid endpoint URL '" + options_.endpoint + "'");
  }
  base_url_ = match[1].str();
  path_ = match[2].matched ? match[2].str() : "/";
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

CompletionResult LiveBackend::complete(const ModelSpec& model, const RequestParams& params,
                                       const CompletionRequest& request) {
  params.validate();
  if (request.body.empty()) {
    throw ProviderError(ErrorKind::Rejected, "empty prompt body");
  }
  if (options_.api_key.empty()) {
    throw ProviderError(ErrorKind::Authentication, std::string(kApiKeyVariable) + " is not set");
  }

  nlohmann::json payload = {
      {"model", model.name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt()}}})},
      {"temperature", params.temperature},
      {"max_completion_tokens", params.max_tokens},
  };
  const std::string body = payload.dump();

  const auto attempt_once = [&]() -> Attempt {
    httplib::Client client(base_url_);
    client.set_connection_timeout(std::chrono::seconds(30));
    client.set_read_timeout(options_.timeout);
    client.set_bearer_token_auth(options_.api_key);

    const auto start = std::chrono::steady_clock::now();
    auto response = client.Post(path_, body, "application/json");
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);

    if (!response) {
      return {std::nullopt,
              ProviderError(ErrorKind::Transport, "request failed: " + httplib::to_string(response.error())),
              true};
    }
    const int status = response->status;
    if (status == 401 || status == 403) {
      return {std::nullopt,
              ProviderError(ErrorKind::Authentication, "HTTP " + std::to_string(status) + ": " + response->body),
              false};
    }
    if (status < 200 || status >= 300) {
      const ErrorKind kind = retryable_status(status) ? ErrorKind::Transport : ErrorKind::Rejected;
      return {std::nullopt, ProviderError(kind, "HTTP " + std::to_string(status) + ": " + response->body),
              retryable_status(status)};
    }
    CompletionResult result = parse_completion(response->body, model.name);
    result.latency_ms = elapsed.count();
    return {std::move(result), std::nullopt, false};
  };

  auto backoff = options_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    Attempt outcome = attempt_once();
    if (outcome.result) {
      return std::move(*outcome.result);
    }
    if (!outcome.retry || attempt >= options_.max_retries) {
      throw std::move(*outcome.error);
    }
    options_.sleep(backoff);
    backoff *= 2;
  }
}

}  // namespace semtag::provider
