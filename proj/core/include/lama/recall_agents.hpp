#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lama/llm_backend.hpp"
#include "lama/prompts.hpp"
#include "lama/taxonomy.hpp"

namespace lama {

inline constexpr int kDefaultMaxRecall = 4;

struct RecallEntry {
  std::string person;
  Label nationality;
  AgentKind source = AgentKind::person;
  std::size_t emit_index = 0;

  friend bool operator==(const RecallEntry&, const RecallEntry&) = default;
};

struct AgentRecall {
  AgentKind agent = AgentKind::person;
  std::vector<RecallEntry> entries;  // at most M, in emit order

  bool empty() const noexcept { return entries.empty(); }
  friend bool operator==(const AgentRecall&, const AgentRecall&) = default;
};

// Everything a recall stage needs besides the name.
struct RecallContext {
  ChatBackend& backend;
  const LabelSpace& labels;
  Granularity granularity = Granularity::nationality;
  std::string model_id;
  int max_recall = kDefaultMaxRecall;
};

ChatRequest build_recall_prompt(AgentKind agent, std::string_view name, const LabelSpace& labels,
                                int max_recall = kDefaultMaxRecall,
                                Granularity granularity = Granularity::nationality,
                                std::string model_id = {});

// Keeps entries with a non-empty "name" and an attribute that normalizes into
// `labels`; keeps the first `max_recall` valid ones. A response without a
// JSON array yields an empty recall. `attribute_field` is the JSON key
// holding the label.
AgentRecall parse_recall_response(const ChatResponse& response, AgentKind agent,
                                  const LabelSpace& labels, int max_recall,
                                  std::string_view attribute_field = "nationality");

struct AgentOutcome {
  AgentRecall recall;
  int calls = 0;      // first attempts (0 when the agent is disabled)
  int reprompts = 0;  // re-asks after unparseable output
  bool failed = false;  // transport/backend error degraded to empty recall
};

// One agent: prompt, send, parse. Unparseable output is re-asked once with the
// cache bypassed; backend errors degrade to an empty recall.
AgentOutcome run_agent(AgentKind agent, std::string_view name, const RecallContext& ctx);

struct DualRecall {
  AgentOutcome person;
  AgentOutcome media;
};

// Issues both agents concurrently. Disabled agents make no call and return
// an empty recall.
DualRecall run_dual_recall(std::string_view name, const RecallContext& ctx,
                           bool person_enabled = true, bool media_enabled = true);

nlohmann::json to_json(const RecallEntry& entry);

}  // namespace lama
