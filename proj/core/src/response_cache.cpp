#include "lama/response_cache.hpp"

#include <chrono>
#include <ctime>

#include <nlohmann/json.hpp>

#include "lama/hashing.hpp"

namespace lama {

std::string cache_key(const ChatRequest& request) {
  std::string material;
  material.reserve(request.model_id.size() + request.system_prompt.size() +
                   request.user_prompt.size() + 2);
  material += request.model_id;
  material += '\0';
  material += request.system_prompt;
  material += '\0';
  material += request.user_prompt;
  return sha256_hex(material);
}

namespace {

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  if (std::ifstream in(*path_); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto record = nlohmann::json::parse(line, nullptr, false);
      // A torn final line from an interrupted run is skipped, not fatal.
      if (record.is_discarded() || !record.contains("key") || !record.contains("response")) {
        ++skipped_lines_;
        continue;
      }
      entries_[record["key"].get<std::string>()] = record["response"].get<std::string>();
    }
  }
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  out_.open(*path_, std::ios::app);
  if (!out_) throw std::runtime_error("cannot open cache file for append: " + path_->string());
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::store(const std::string& key, const ChatRequest& request,
                          const std::string& text) {
  std::unique_lock lock(mutex_);
  entries_[key] = text;
  if (out_.is_open()) {
    nlohmann::json record{{"key", key},
                          {"model", request.model_id},
                          {"system", request.system_prompt},
                          {"user", request.user_prompt},
                          {"response", text},
                          {"timestamp", utc_timestamp()}};
    out_ << record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    out_.flush();
  }
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

ChatResponse CachingChatBackend::send(const ChatRequest& request, SendOptions options) {
  const std::string key = cache_key(request);
  if (!options.bypass_cache) {
    if (auto hit = cache_.lookup(key)) return ChatResponse{std::move(*hit), {}, true};
  }
  ChatResponse response = inner_.send(request, options);
  cache_.store(key, request, response.text);
  response.from_cache = false;
  return response;
}

}  // namespace lama
