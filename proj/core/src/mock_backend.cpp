#include "lama/mock_backend.hpp"

#include <fstream>
#include <sstream>

#include "lama/hashing.hpp"

namespace lama {
namespace {

using PersonMap = std::map<std::string, std::vector<KnownPerson>>;
using LabelListMap = std::map<std::string, std::vector<std::string>>;

void check_label(const std::string& label, const LabelSpace* labels, std::string_view where) {
  if (labels != nullptr && !labels->normalize(label)) {
    throw std::invalid_argument("mock knowledge base: " + std::string(where) + ": label '" +
                                label + "' is not in the label set");
  }
}

PersonMap read_people(const nlohmann::json& doc, const char* section, const LabelSpace* labels) {
  PersonMap out;
  if (!doc.contains(section)) return out;
  for (const auto& [key, people] : doc.at(section).items()) {
    auto& list = out[ascii_lower(trim(key))];
    for (const auto& p : people) {
      KnownPerson person{p.at("name").get<std::string>(), p.at("nationality").get<std::string>()};
      check_label(person.nationality, labels, std::string(section) + "." + key);
      list.push_back(std::move(person));
    }
  }
  return out;
}

LabelListMap read_label_lists(const nlohmann::json& doc, const char* section,
                              const LabelSpace* labels) {
  LabelListMap out;
  if (!doc.contains(section)) return out;
  for (const auto& [key, list] : doc.at(section).items()) {
    auto& dst = out[ascii_lower(trim(key))];
    for (const auto& l : list) {
      dst.push_back(l.get<std::string>());
      check_label(dst.back(), labels, std::string(section) + "." + key);
    }
  }
  return out;
}

std::vector<std::string> tokens(std::string_view name) {
  std::vector<std::string> out;
  std::istringstream in{std::string(name)};
  for (std::string tok; in >> tok;) out.push_back(ascii_lower(tok));
  return out;
}

template <typename Map>
auto lookup_name(const Map& map, std::string_view name) -> typename Map::mapped_type {
  const std::string full = ascii_lower(trim(name));
  if (auto it = map.find(full); it != map.end()) return it->second;
  typename Map::mapped_type out;
  for (const auto& tok : tokens(name)) {
    if (auto it = map.find(tok); it != map.end()) {
      out.insert(out.end(), it->second.begin(), it->second.end());
    }
  }
  return out;
}

std::optional<Granularity> prompt_granularity(std::string_view system_prompt) {
  if (system_prompt.find("Valid regions:") != std::string_view::npos) return Granularity::region;
  if (system_prompt.find("Valid continents:") != std::string_view::npos) {
    return Granularity::continent;
  }
  return Granularity::nationality;
}

}  // namespace

MockKnowledgeBase MockKnowledgeBase::from_json(const nlohmann::json& doc,
                                               const LabelSpace* labels) {
  if (!doc.is_object()) throw std::invalid_argument("mock knowledge base: not a JSON object");
  MockKnowledgeBase kb;
  kb.person_domain = read_people(doc, "person_domain", labels);
  kb.media_domain = read_people(doc, "media_domain", labels);
  kb.direct_answers = read_label_lists(doc, "direct_answers", labels);
  kb.completion_answers = read_label_lists(doc, "completion_answers", labels);
  return kb;
}

MockKnowledgeBase MockKnowledgeBase::load(const std::filesystem::path& path,
                                          const LabelSpace* labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mock knowledge base: " + path.string());
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw std::invalid_argument("mock knowledge base is not valid JSON: " + path.string());
  }
  return from_json(doc, labels);
}

nlohmann::json MockKnowledgeBase::to_json() const {
  auto people = [](const PersonMap& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, list] : m) {
      auto& arr = j[k] = nlohmann::json::array();
      for (const auto& p : list) arr.push_back({{"name", p.name}, {"nationality", p.nationality}});
    }
    return j;
  };
  auto lists = [](const LabelListMap& m) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, list] : m) j[k] = list;
    return j;
  };
  return {{"person_domain", people(person_domain)},
          {"media_domain", people(media_domain)},
          {"direct_answers", lists(direct_answers)},
          {"completion_answers", lists(completion_answers)}};
}

std::vector<KnownPerson> MockKnowledgeBase::recall(AgentKind kind, std::string_view name) const {
  return lookup_name(kind == AgentKind::person ? person_domain : media_domain, name);
}

std::vector<std::string> MockKnowledgeBase::direct(std::string_view name) const {
  if (auto it = direct_answers.find(ascii_lower(trim(name))); it != direct_answers.end()) {
    return it->second;
  }
  return {};
}

std::vector<std::string> MockKnowledgeBase::completion(std::string_view name) const {
  if (auto it = completion_answers.find(ascii_lower(trim(name))); it != completion_answers.end()) {
    return it->second;
  }
  return {};
}

std::string MockChatBackend::project(const std::string& label, std::string_view field) const {
  if (taxonomy_ == nullptr || field == "nationality") return label;
  auto nat = taxonomy_->nationalities().normalize(label);
  if (!nat) return label;
  return taxonomy_->project(*nat, field == "region" ? Granularity::region : Granularity::continent)
      .str();
}

ChatResponse MockChatBackend::send(const ChatRequest& request, SendOptions /*options*/) {
  ++calls_;
  const auto kind = classify_system_prompt(request.system_prompt);
  if (!kind) throw BackendError(BackendError::Kind::protocol, "mock: unrecognized system prompt");
  const auto name = name_from_user_prompt(request.user_prompt);
  if (!name) throw BackendError(BackendError::Kind::protocol, "mock: user prompt has no name");

  std::string field = "nationality";
  switch (*prompt_granularity(request.system_prompt)) {
    case Granularity::nationality: break;
    case Granularity::region: field = "region"; break;
    case Granularity::continent: field = "continent"; break;
  }

  nlohmann::json out = nlohmann::json::array();
  switch (*kind) {
    case PromptKind::person_recall:
    case PromptKind::media_recall: {
      const auto agent = *kind == PromptKind::person_recall ? AgentKind::person : AgentKind::media;
      const std::string key = attribute_field_in(request.system_prompt);
      for (const auto& p : kb_.recall(agent, *name)) {
        out.push_back({{"name", p.name}, {key, project(p.nationality, key)}});
      }
      break;
    }
    case PromptKind::direct:
      for (const auto& l : kb_.direct(*name)) out.push_back(project(l, field));
      break;
    case PromptKind::completion:
      for (const auto& l : kb_.completion(*name)) out.push_back(project(l, field));
      break;
  }
  return ChatResponse{out.dump(), std::chrono::milliseconds{0}, false};
}

}  // namespace lama
