#include "lama/llm_backend.hpp"

#include "lama/http_backend.hpp"
#include "lama/response_cache.hpp"

namespace lama {

void BackendConfig::validate() const {
  if (max_retries < 0) throw std::invalid_argument("backend: max_retries must be >= 0");
  if (timeout.count() <= 0) throw std::invalid_argument("backend: timeout must be > 0");
  if (initial_backoff.count() < 0) {
    throw std::invalid_argument("backend: initial_backoff must be >= 0");
  }
  if (base_url.empty()) throw std::invalid_argument("backend: base_url is empty");
}

ConcurrencyLimitedBackend::ConcurrencyLimitedBackend(ChatBackend& inner, std::size_t limit)
    : inner_(inner), limit_(limit) {
  if (limit_ == 0) throw std::invalid_argument("concurrency limit must be >= 1");
}

ChatResponse ConcurrencyLimitedBackend::send(const ChatRequest& request, SendOptions options) {
  {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
  }
  struct Release {
    ConcurrencyLimitedBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mutex_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};
  return inner_.send(request, options);
}

std::size_t ConcurrencyLimitedBackend::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

ChatResponse send_chat(const ChatRequest& request, const BackendConfig& cfg, SendOptions options) {
  cfg.validate();
  if (cfg.cache_path) {
    ResponseCache cache(*cfg.cache_path);
    const std::string key = cache_key(request);
    if (!options.bypass_cache) {
      if (auto hit = cache.lookup(key)) return ChatResponse{*hit, {}, true};
    }
    OpenAiChatBackend live(cfg);
    CachingChatBackend cached(live, cache);
    return cached.send(request, SendOptions{true});
  }
  OpenAiChatBackend live(cfg);
  return live.send(request, options);
}

}  // namespace lama
