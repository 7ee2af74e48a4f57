#include "lama/http_backend.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace lama {

nlohmann::json chat_completions_body(const ChatRequest& request) {
  return nlohmann::json{
      {"model", request.model_id},
      {"temperature", request.temperature},
      {"messages",
       nlohmann::json::array({
           {{"role", "system"}, {"content", request.system_prompt}},
           {{"role", "user"}, {"content", request.user_prompt}},
       })},
  };
}

std::string parse_chat_completion(const std::string& body) {
  auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw BackendError(BackendError::Kind::protocol, "chat completion: response is not JSON");
  }
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw BackendError(BackendError::Kind::protocol, "chat completion: no choices in response");
  }
  const auto& message = (*choices)[0].value("message", nlohmann::json::object());
  const auto content = message.find("content");
  if (content == message.end() || !content->is_string()) {
    throw BackendError(BackendError::Kind::protocol, "chat completion: no message content");
  }
  return content->get<std::string>();
}

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

OpenAiChatBackend::OpenAiChatBackend(BackendConfig config) : config_(std::move(config)) {
  config_.validate();
  // An empty api_key_env means the endpoint takes no key (local servers).
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw BackendError(BackendError::Kind::missing_api_key,
                         "environment variable " + config_.api_key_env + " is not set");
    }
    api_key_ = key;
  }

  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("backend: base_url must start with http:// or https://");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (url.starts_with("https://")) {
    throw BackendError(BackendError::Kind::unsupported, "built without TLS support");
  }
#endif
}

ChatResponse OpenAiChatBackend::send(const ChatRequest& request, SendOptions /*options*/) {
  using clock = std::chrono::steady_clock;
  const auto started = clock::now();
  const std::string body = chat_completions_body(request).dump();
  const std::string path = path_prefix_ + "/chat/completions";

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto backoff = config_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    ++attempts_;
    const bool last = attempt >= config_.max_retries;

    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const auto attempt_start = clock::now();
    auto result = client.Post(path, headers, body, "application/json");

    if (!result) {
      const auto err = result.error();
      const bool timed_out =
          err == httplib::Error::ConnectionTimeout ||
          (err == httplib::Error::Read && clock::now() - attempt_start >= config_.timeout);
      if (last) {
        throw BackendError(timed_out ? BackendError::Kind::timeout : BackendError::Kind::transport,
                           "chat completion: " + httplib::to_string(err) + " after " +
                               std::to_string(attempt + 1) + " attempt(s) to " +
                               scheme_host_port_);
      }
    } else if (result->status == 200) {
      ChatResponse response;
      response.text = parse_chat_completion(result->body);
      response.latency =
          std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - started);
      return response;
    } else if (!retryable_status(result->status) || last) {
      throw BackendError(BackendError::Kind::http_status,
                         "chat completion: HTTP " + std::to_string(result->status) + ": " +
                             result->body.substr(0, 512),
                         result->status);
    }

    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

}  // namespace lama
