#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "lama/taxonomy.hpp"

namespace lama {

enum class AgentKind { person, media };

std::string_view to_string(AgentKind kind);

enum class PromptKind { person_recall, media_recall, completion, direct };

// Renders the four system prompts and their user prompts. The label list is
// substituted into the "Valid ...:" slot; the counts come from M and K, so
// the defaults (M = 4, K = 5) reproduce the golden prompt text exactly. At
// region/continent granularity the attribute noun and JSON field follow.
class PromptBuilder {
 public:
  PromptBuilder(const LabelSpace& labels, Granularity granularity, int max_recall, int top_k);

  std::string recall_system(AgentKind kind) const;
  std::string completion_system() const;
  std::string direct_system() const;

  static std::string recall_user(std::string_view name);
  static std::string direct_user(std::string_view name);
  // recalled_json is the serialized recall set (JSON array text).
  std::string completion_user(std::string_view name, std::string_view recalled_json,
                              const Label& top1) const;
  std::string completion_fallback_user(std::string_view name, const Label& top1) const;

  // JSON key carrying the attribute in recall output ("nationality", "region", ...).
  const std::string& attribute_field() const noexcept { return field_; }
  Granularity granularity() const noexcept { return granularity_; }

 private:
  const LabelSpace* labels_;
  Granularity granularity_;
  int max_recall_;
  int top_k_;
  std::string singular_;  // nationality
  std::string plural_;    // nationalities
  std::string title_;     // Nationality
  std::string field_;
};

// Identifies which of the four prompts a system message is, by its fixed
// opening text.
std::optional<PromptKind> classify_system_prompt(std::string_view system_prompt);

// Reads the attribute field name out of a recall system prompt's example
// object (`"nationality": "Nationality"`). Defaults to "nationality".
std::string attribute_field_in(std::string_view system_prompt);

// The value of the leading "Name: ..." line of a user prompt.
std::optional<std::string> name_from_user_prompt(std::string_view user_prompt);

}  // namespace lama
