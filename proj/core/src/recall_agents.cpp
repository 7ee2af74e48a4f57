#include "lama/recall_agents.hpp"

#include <future>

namespace lama {

ChatRequest build_recall_prompt(AgentKind agent, std::string_view name, const LabelSpace& labels,
                                int max_recall, Granularity granularity, std::string model_id) {
  if (name.empty()) throw std::invalid_argument("recall prompt: empty name");
  PromptBuilder prompts(labels, granularity, max_recall, /*top_k=*/5);
  return ChatRequest{prompts.recall_system(agent), PromptBuilder::recall_user(name),
                     std::move(model_id), 1.0};
}

namespace {

AgentRecall parse_array(const nlohmann::json& array, AgentKind agent, const LabelSpace& labels,
                        int max_recall, std::string_view attribute_field) {
  AgentRecall recall{agent, {}};
  const std::string field(attribute_field);
  std::size_t emit_index = 0;
  for (const auto& item : array) {
    const std::size_t index = emit_index++;
    if (static_cast<int>(recall.entries.size()) >= max_recall) break;
    if (!item.is_object()) continue;
    auto name = item.find("name");
    auto attr = item.find(field);
    if (name == item.end() || attr == item.end() || !name->is_string() || !attr->is_string()) {
      continue;
    }
    const auto person = name->get<std::string>();
    if (person.empty()) continue;
    auto label = labels.normalize(attr->get<std::string>());
    if (!label) continue;
    recall.entries.push_back(RecallEntry{person, *label, agent, index});
  }
  return recall;
}

}  // namespace

AgentRecall parse_recall_response(const ChatResponse& response, AgentKind agent,
                                  const LabelSpace& labels, int max_recall,
                                  std::string_view attribute_field) {
  if (max_recall < 1) throw std::invalid_argument("parse_recall_response: M must be >= 1");
  auto array = extract_json_array(response.text);
  if (!array) return AgentRecall{agent, {}};
  return parse_array(*array, agent, labels, max_recall, attribute_field);
}

AgentOutcome run_agent(AgentKind agent, std::string_view name, const RecallContext& ctx) {
  AgentOutcome outcome;
  outcome.recall.agent = agent;
  PromptBuilder prompts(ctx.labels, ctx.granularity, ctx.max_recall, /*top_k=*/5);
  const ChatRequest request{prompts.recall_system(agent), PromptBuilder::recall_user(name),
                            ctx.model_id, 1.0};
  try {
    ++outcome.calls;
    auto response = ctx.backend.send(request);
    auto array = extract_json_array(response.text);
    if (!array) {
      ++outcome.reprompts;
      response = ctx.backend.send(request, SendOptions{.bypass_cache = true});
      array = extract_json_array(response.text);
    }
    if (array) {
      outcome.recall =
          parse_array(*array, agent, ctx.labels, ctx.max_recall, prompts.attribute_field());
    }
  } catch (const BackendError&) {
    outcome.failed = true;
    outcome.recall.entries.clear();
  }
  return outcome;
}

DualRecall run_dual_recall(std::string_view name, const RecallContext& ctx, bool person_enabled,
                           bool media_enabled) {
  if (name.empty()) throw std::invalid_argument("run_dual_recall: empty name");
  auto launch = [&](AgentKind kind, bool enabled) {
    if (!enabled) {
      std::promise<AgentOutcome> idle;
      idle.set_value(AgentOutcome{AgentRecall{kind, {}}, 0, 0, false});
      return idle.get_future();
    }
    return std::async(std::launch::async, [&ctx, kind, name] { return run_agent(kind, name, ctx); });
  };
  auto person = launch(AgentKind::person, person_enabled);
  auto media = launch(AgentKind::media, media_enabled);
  return DualRecall{person.get(), media.get()};
}

nlohmann::json to_json(const RecallEntry& entry) {
  return {{"person", entry.person},
          {"nationality", entry.nationality.str()},
          {"source", to_string(entry.source)},
          {"emit_index", entry.emit_index}};
}

}  // namespace lama
