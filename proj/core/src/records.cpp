#include "lama/records.hpp"

#include <fstream>

#include "lama/hashing.hpp"

namespace lama {

std::vector<NameRecord> read_names_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open names file " + path.string());
  std::vector<NameRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    NameRecord record;
    record.name = std::string(trim(std::string_view(line).substr(0, tab)));
    if (tab != std::string::npos) {
      std::string gold(trim(std::string_view(line).substr(tab + 1)));
      if (!gold.empty()) record.gold = std::move(gold);
    }
    if (!record.name.empty()) out.push_back(std::move(record));
  }
  return out;
}

nlohmann::json to_json(const PredictionRecord& record) {
  nlohmann::json ranks = nlohmann::json::array();
  for (const auto& r : record.ranking.ranks) {
    ranks.push_back({{"label", r.label.str()}, {"provenance", to_string(r.provenance)}});
  }
  nlohmann::json recall = nlohmann::json::array();
  for (const auto& e : record.recall.entries) recall.push_back(to_json(e));

  nlohmann::json j = {
      {"name", record.name},
      {"gold", record.gold ? nlohmann::json(record.gold->str()) : nlohmann::json(nullptr)},
      {"granularity", to_string(record.granularity)},
      {"ranks", std::move(ranks)},
      {"recall", std::move(recall)},
      {"used_fallback", record.ranking.used_fallback},
      {"calls",
       {{"recall", record.calls.recall_calls},
        {"direct", record.calls.direct_calls},
        {"completion", record.calls.completion_calls},
        {"reprompt", record.calls.reprompt_calls},
        {"total", record.calls.total()}}},
  };
  if (record.elapsed) j["timing_ms"] = record.elapsed->count();
  return j;
}

namespace {

AgentKind agent_from_string(const std::string& s) {
  if (s == "person") return AgentKind::person;
  if (s == "media") return AgentKind::media;
  throw std::invalid_argument("unknown recall source '" + s + "'");
}

Label resolve_any_level(const std::string& raw, const Taxonomy& taxonomy, Granularity preferred) {
  if (auto l = taxonomy.space(preferred).normalize(raw)) return *l;
  for (auto g : {Granularity::nationality, Granularity::region, Granularity::continent}) {
    if (auto l = taxonomy.space(g).normalize(raw)) return *l;
  }
  throw UnknownLabelError(raw);
}

}  // namespace

PredictionRecord prediction_record_from_json(const nlohmann::json& j, const Taxonomy& taxonomy) {
  PredictionRecord record;
  record.name = j.at("name").get<std::string>();
  record.granularity = granularity_from_string(j.value("granularity", "nationality"));
  const LabelSpace& space = taxonomy.space(record.granularity);
  if (j.contains("gold") && j["gold"].is_string()) record.gold = space.at(j["gold"].get<std::string>());
  for (const auto& r : j.at("ranks")) {
    record.ranking.ranks.push_back(
        {space.at(r.at("label").get<std::string>()),
         provenance_from_string(r.value("provenance", std::string("pad")))});
  }
  record.ranking.used_fallback = j.value("used_fallback", false);
  if (j.contains("recall")) {
    for (const auto& e : j["recall"]) {
      record.recall.entries.push_back(RecallEntry{
          e.at("person").get<std::string>(),
          resolve_any_level(e.at("nationality").get<std::string>(), taxonomy, record.granularity),
          agent_from_string(e.value("source", std::string("person"))),
          e.value("emit_index", std::size_t{0})});
    }
  }
  if (j.contains("calls")) {
    const auto& c = j["calls"];
    record.calls.recall_calls = c.value("recall", 0);
    record.calls.direct_calls = c.value("direct", 0);
    record.calls.completion_calls = c.value("completion", 0);
    record.calls.reprompt_calls = c.value("reprompt", 0);
  }
  if (j.contains("timing_ms")) record.elapsed = std::chrono::milliseconds(j["timing_ms"].get<long long>());
  return record;
}

std::vector<PredictionRecord> read_prediction_records(const std::filesystem::path& path,
                                                      const Taxonomy& taxonomy) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions file " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(prediction_record_from_json(nlohmann::json::parse(line), taxonomy));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace lama
