#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lama/llm_backend.hpp"
#include "lama/prompts.hpp"
#include "lama/taxonomy.hpp"

namespace lama {

struct KnownPerson {
  std::string name;
  std::string nationality;
};

// Offline stand-in for an LLM's world knowledge.
//
// JSON shape:
//   {
//     "person_domain": {"tanaka": [{"name": "...", "nationality": "Japanese"}]},
//     "media_domain":  {...same shape...},
//     "direct_answers": {"xqz qwt": ["Chinese", "Taiwanese", ...]},
//     "completion_answers": {"natalie cook": ["British", "American", ...]}
//   }
// Keys are lowercase. Recall lookups try the whole lowercased name first and
// otherwise concatenate the entries of each whitespace token, in name order.
struct MockKnowledgeBase {
  std::map<std::string, std::vector<KnownPerson>> person_domain;
  std::map<std::string, std::vector<KnownPerson>> media_domain;
  std::map<std::string, std::vector<std::string>> direct_answers;
  std::map<std::string, std::vector<std::string>> completion_answers;

  // When `labels` is non-null every label string must belong to it.
  static MockKnowledgeBase from_json(const nlohmann::json& doc, const LabelSpace* labels = nullptr);
  static MockKnowledgeBase load(const std::filesystem::path& path,
                                const LabelSpace* labels = nullptr);
  nlohmann::json to_json() const;

  std::vector<KnownPerson> recall(AgentKind kind, std::string_view name) const;
  std::vector<std::string> direct(std::string_view name) const;
  std::vector<std::string> completion(std::string_view name) const;
};

// Deterministic backend answering the four production prompts from a
// MockKnowledgeBase. It recognizes the prompt by its fixed system text and
// replies with a JSON array, exactly as a cooperative model would. A pure
// function of (request, knowledge base).
//
// If a taxonomy is supplied and the prompt asks for regions or continents,
// nationality answers are projected to that granularity.
class MockChatBackend final : public ChatBackend {
 public:
  explicit MockChatBackend(MockKnowledgeBase kb, const Taxonomy* taxonomy = nullptr)
      : kb_(std::move(kb)), taxonomy_(taxonomy) {}

  ChatResponse send(const ChatRequest& request, SendOptions options = {}) override;

  std::size_t calls() const noexcept { return calls_.load(); }
  const MockKnowledgeBase& knowledge_base() const noexcept { return kb_; }

 private:
  std::string project(const std::string& label, std::string_view field) const;

  MockKnowledgeBase kb_;
  const Taxonomy* taxonomy_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace lama
