#include "lama/prompts.hpp"

#include "lama/hashing.hpp"

namespace lama {

std::string_view to_string(AgentKind kind) {
  return kind == AgentKind::person ? "person" : "media";
}

PromptBuilder::PromptBuilder(const LabelSpace& labels, Granularity granularity, int max_recall,
                             int top_k)
    : labels_(&labels), granularity_(granularity), max_recall_(max_recall), top_k_(top_k) {
  switch (granularity) {
    case Granularity::nationality:
      singular_ = "nationality";
      plural_ = "nationalities";
      title_ = "Nationality";
      break;
    case Granularity::region:
      singular_ = "region";
      plural_ = "regions";
      title_ = "Region";
      break;
    case Granularity::continent:
      singular_ = "continent";
      plural_ = "continents";
      title_ = "Continent";
      break;
  }
  field_ = singular_;
}

std::string PromptBuilder::recall_system(AgentKind kind) const {
  std::string p;
  if (kind == AgentKind::person) {
    p += "You are recalling real people based on a given name.\n";
    p += "Think of REAL, ACTUAL famous people who have this exact name or a very similar name.\n";
  } else {
    p += "You are recalling athletes and entertainers based on a given name.\n";
    p += "Think of REAL people from sports, movies, music, or TV who have this exact name or "
         "similar.\n";
  }
  p += "\n";
  p += "For each person:\n";
  p += "1. Full name\n";
  p += "2. " + title_ + " (from valid list only)\n";
  p += "\n";
  p += "Valid " + plural_ + ": " + labels_->joined() + "\n";
  p += "\n";
  p += "Output JSON array of up to " + std::to_string(max_recall_) + " people:\n";
  p += "[{\"name\": \"Full Name\", \"" + field_ + "\": \"" + title_ + "\"}]\n";
  p += "\n";
  p += "Be honest - only include people you are CONFIDENT actually exist.";
  return p;
}

std::string PromptBuilder::completion_system() const {
  const std::string more = std::to_string(top_k_ - 1);
  const std::string ranks = "ranks 2-" + std::to_string(top_k_);
  std::string p;
  p += "Given a name and the most likely " + singular_ + " (rank 1), suggest " + more + " more " +
       plural_ + " that could also be possible.\n";
  p += "\n";
  p += "Consider:\n";
  p += "1. Culturally/geographically similar countries\n";
  p += "2. Countries where this name pattern might also appear\n";
  p += "3. Historical migration patterns\n";
  p += "\n";
  p += "The rank 1 " + singular_ + " is already determined. Suggest " + ranks + ".\n";
  p += "\n";
  p += "Valid " + plural_ + ": " + labels_->joined() + "\n";
  p += "Output a JSON array of exactly " + more + " " + plural_ + " for " + ranks + ".";
  return p;
}

std::string PromptBuilder::direct_system() const {
  const std::string k = std::to_string(top_k_);
  std::string p;
  p += "You are an expert in identifying the " + singular_ + " of people based on their names.\n";
  p += "Predict the TOP " + k + " most likely " + plural_ + " for the given name.\n";
  p += "\n";
  p += "Valid " + plural_ + ": " + labels_->joined() + "\n";
  p += "Output a JSON array of " + k + " " + plural_ + ".";
  return p;
}

std::string PromptBuilder::recall_user(std::string_view name) {
  return "Name: " + std::string(name) + "\n\nRecall real people with this name.";
}

std::string PromptBuilder::direct_user(std::string_view name) {
  return "Name: " + std::string(name);
}

std::string PromptBuilder::completion_user(std::string_view name, std::string_view recalled_json,
                                           const Label& top1) const {
  std::string p;
  p += "Name: " + std::string(name) + "\n";
  p += "\n";
  p += "Recalled people: " + std::string(recalled_json) + "\n";
  p += "Rank 1 (from recall): " + top1.str() + "\n";
  p += "\n";
  p += "Suggest " + std::to_string(top_k_ - 1) + " more " + plural_ + " for ranks 2-" +
       std::to_string(top_k_) + ".";
  return p;
}

std::string PromptBuilder::completion_fallback_user(std::string_view name,
                                                    const Label& top1) const {
  std::string p;
  p += "Name: " + std::string(name) + "\n";
  p += "Rank 1 (confirmed): " + top1.str() + "\n";
  p += "\n";
  p += "Suggest " + std::to_string(top_k_ - 1) + " more " + plural_ + " for ranks 2-" +
       std::to_string(top_k_) + ".";
  return p;
}

std::optional<PromptKind> classify_system_prompt(std::string_view system_prompt) {
  if (system_prompt.starts_with("You are recalling real people based on a given name.")) {
    return PromptKind::person_recall;
  }
  if (system_prompt.starts_with("You are recalling athletes and entertainers based on a given "
                                "name.")) {
    return PromptKind::media_recall;
  }
  if (system_prompt.starts_with("Given a name and the most likely ")) {
    return PromptKind::completion;
  }
  if (system_prompt.starts_with("You are an expert in identifying the ")) {
    return PromptKind::direct;
  }
  return std::nullopt;
}

std::string attribute_field_in(std::string_view system_prompt) {
  constexpr std::string_view kMarker = "[{\"name\": \"Full Name\", \"";
  const auto pos = system_prompt.find(kMarker);
  if (pos == std::string_view::npos) return "nationality";
  const auto start = pos + kMarker.size();
  const auto end = system_prompt.find('"', start);
  if (end == std::string_view::npos) return "nationality";
  return std::string(system_prompt.substr(start, end - start));
}

std::optional<std::string> name_from_user_prompt(std::string_view user_prompt) {
  constexpr std::string_view kPrefix = "Name: ";
  if (!user_prompt.starts_with(kPrefix)) return std::nullopt;
  auto rest = user_prompt.substr(kPrefix.size());
  return std::string(rest.substr(0, rest.find('\n')));
}

}  // namespace lama
