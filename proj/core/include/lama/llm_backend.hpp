#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace lama {

struct ChatRequest {
  std::string system_prompt;
  std::string user_prompt;
  std::string model_id;
  double temperature = 1.0;
};

struct ChatResponse {
  std::string text;  // verbatim model payload
  std::chrono::milliseconds latency{0};
  bool from_cache = false;
};

struct BackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model_id = "gpt-4.1-mini";
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::optional<std::filesystem::path> cache_path;

  // Throws std::invalid_argument when max_retries < 0 or timeout <= 0.
  void validate() const;
};

class BackendError : public std::runtime_error {
 public:
  enum class Kind { transport, timeout, http_status, missing_api_key, protocol, unsupported };

  BackendError(Kind kind, std::string message, int http_status = 0)
      : std::runtime_error(std::move(message)), kind_(kind), http_status_(http_status) {}

  Kind kind() const noexcept { return kind_; }
  int http_status() const noexcept { return http_status_; }

 private:
  Kind kind_;
  int http_status_;
};

struct SendOptions {
  // Skip the cache lookup (the fresh response is still recorded).
  bool bypass_cache = false;
};

// A chat-completion endpoint. Implementations must be safe to call from
// multiple threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse send(const ChatRequest& request, SendOptions options = {}) = 0;
};

// Locates the first well-formed JSON array in free-form model output, e.g.
// inside prose or a ```json fence. Absent when there is none.
std::optional<nlohmann::json> extract_json_array(std::string_view text);

// Caps the number of requests simultaneously inside the wrapped backend.
class ConcurrencyLimitedBackend final : public ChatBackend {
 public:
  ConcurrencyLimitedBackend(ChatBackend& inner, std::size_t limit);

  ChatResponse send(const ChatRequest& request, SendOptions options = {}) override;

  std::size_t peak_in_flight() const;

 private:
  ChatBackend& inner_;
  const std::size_t limit_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t in_flight_ = 0;
  std::size_t peak_ = 0;
};

// One-shot helper: live OpenAI-compatible call for `cfg`, going through the
// response cache when cfg.cache_path is set.
ChatResponse send_chat(const ChatRequest& request, const BackendConfig& cfg,
                       SendOptions options = {});

}  // namespace lama
