#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "lama/llm_backend.hpp"

namespace lama {

// Key = SHA-256 over (model_id, system_prompt, user_prompt). Temperature is
// deliberately not part of the key.
std::string cache_key(const ChatRequest& request);

// Append-only JSONL response store. Each line is
//   {"key":..., "model":..., "system":..., "user":..., "response":..., "timestamp":...}
// When a key occurs more than once the last record wins. Lookups take a
// shared lock; appends are serialized.
class ResponseCache {
 public:
  ResponseCache() = default;  // in-memory only
  explicit ResponseCache(std::filesystem::path path);

  std::optional<std::string> lookup(const std::string& key) const;
  void store(const std::string& key, const ChatRequest& request, const std::string& text);

  std::size_t size() const;
  std::size_t skipped_lines() const noexcept { return skipped_lines_; }

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  std::ofstream out_;
  std::size_t skipped_lines_ = 0;
};

class CachingChatBackend final : public ChatBackend {
 public:
  CachingChatBackend(ChatBackend& inner, ResponseCache& cache) : inner_(inner), cache_(cache) {}

  ChatResponse send(const ChatRequest& request, SendOptions options = {}) override;

 private:
  ChatBackend& inner_;
  ResponseCache& cache_;
};

}  // namespace lama
