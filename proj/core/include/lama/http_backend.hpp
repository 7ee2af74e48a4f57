#pragma once

#include <atomic>
#include <string>

#include <nlohmann/json.hpp>

#include "lama/llm_backend.hpp"

namespace lama {

// Body of a POST {base_url}/chat/completions request with messages = [system, user].
nlohmann::json chat_completions_body(const ChatRequest& request);

// Pulls choices[0].message.content out of a chat-completions response body.
// Throws BackendError(protocol) on any other shape.
std::string parse_chat_completion(const std::string& body);

// Live client for OpenAI-compatible chat-completions endpoints (http or https).
// The API key is read from the environment variable named in the config at
// construction; a missing variable is a BackendError(missing_api_key).
class OpenAiChatBackend final : public ChatBackend {
 public:
  explicit OpenAiChatBackend(BackendConfig config);

  ChatResponse send(const ChatRequest& request, SendOptions options = {}) override;

  // Number of HTTP attempts made so far (including retries).
  std::size_t attempts() const noexcept { return attempts_.load(); }

 private:
  BackendConfig config_;
  std::string api_key_;
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::atomic<std::size_t> attempts_{0};
};

}  // namespace lama
