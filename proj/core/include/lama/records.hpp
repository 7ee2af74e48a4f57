#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lama/prediction.hpp"
#include "lama/taxonomy.hpp"

namespace lama {

// One line of a names file: `name` or `name<TAB>label`.
struct NameRecord {
  std::string name;
  std::optional<std::string> gold;
};

std::vector<NameRecord> read_names_file(const std::filesystem::path& path);

// One line of a predictions JSONL file.
struct PredictionRecord {
  std::string name;
  std::optional<Label> gold;
  Granularity granularity = Granularity::nationality;
  PredictionRanking ranking;
  RecallSet recall;
  CallAccounting calls;
  std::optional<std::chrono::milliseconds> elapsed;
};

nlohmann::json to_json(const PredictionRecord& record);

// Labels are resolved through `taxonomy`: ranks and gold at the record's
// granularity, recall entries at whichever level they were recalled.
PredictionRecord prediction_record_from_json(const nlohmann::json& j, const Taxonomy& taxonomy);

std::vector<PredictionRecord> read_prediction_records(const std::filesystem::path& path,
                                                      const Taxonomy& taxonomy);

}  // namespace lama
