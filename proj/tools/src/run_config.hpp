#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "lama/llm_backend.hpp"
#include "lama/prediction.hpp"
#include "lama/taxonomy.hpp"

namespace lama::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// How region/continent runs obtain their labels: by prompting with the
// coarse label set, or by predicting nationalities and projecting them.
enum class RegionMode { native_prompt, mapped_from_nationality };

std::string_view to_string(RegionMode mode);
RegionMode region_mode_from_string(std::string_view s);

struct RunConfig {
  BackendConfig backend;
  std::optional<std::filesystem::path> mock_kb_path;
  std::filesystem::path taxonomy_path;
  std::optional<std::filesystem::path> manifest_path;
  int max_recall = kDefaultMaxRecall;
  std::optional<int> top_k;  // default depends on granularity
  Granularity granularity = Granularity::nationality;
  RegionMode region_mode = RegionMode::native_prompt;
  AblationFlags ablation;
  std::uint64_t seed = 0;
  std::size_t concurrency = 8;

  int effective_top_k() const { return top_k.value_or(default_top_k(granularity)); }

  // Throws ConfigError.
  void validate() const;
};

// Built-in taxonomy location (the installed or in-tree data file).
std::filesystem::path default_taxonomy_path();

// Overlays the keys present in `doc` onto `config`. Unknown keys are errors.
void apply_config_json(RunConfig& config, const nlohmann::json& doc);

RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

}  // namespace lama::cli
