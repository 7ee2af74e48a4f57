#include "run_config.hpp"

#include <fstream>
#include <set>

namespace lama::cli {

std::string_view to_string(RegionMode mode) {
  return mode == RegionMode::native_prompt ? "native_prompt" : "mapped_from_nationality";
}

RegionMode region_mode_from_string(std::string_view s) {
  if (s == "native_prompt") return RegionMode::native_prompt;
  if (s == "mapped_from_nationality") return RegionMode::mapped_from_nationality;
  throw ConfigError("unknown region_mode '" + std::string(s) +
                    "' (valid: native_prompt, mapped_from_nationality)");
}

void RunConfig::validate() const {
  if (max_recall < 1) throw ConfigError("M must be >= 1");
  if (effective_top_k() < 1) throw ConfigError("K must be >= 1");
  if (concurrency < 1) throw ConfigError("concurrency must be >= 1");
  try {
    backend.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::filesystem::path default_taxonomy_path() {
  if (const char* env = std::getenv("LAMA_TAXONOMY")) return env;
  return LAMA_DEFAULT_TAXONOMY;
}

void apply_config_json(RunConfig& config, const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> kKnown = {
      "backend", "mock_kb", "taxonomy", "manifest", "M", "K", "granularity",
      "region_mode", "ablation", "seed", "concurrency", "cache"};
  static const std::set<std::string> kBackendKnown = {
      "base_url", "api_key_env", "model_id", "timeout_ms", "max_retries", "initial_backoff_ms"};
  try {
    for (const auto& [key, value] : doc.items()) {
      if (!kKnown.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    if (doc.contains("backend")) {
      const auto& b = doc["backend"];
      for (const auto& [key, value] : b.items()) {
        if (!kBackendKnown.contains(key)) throw ConfigError("unknown backend key '" + key + "'");
      }
      auto& be = config.backend;
      be.base_url = b.value("base_url", be.base_url);
      be.api_key_env = b.value("api_key_env", be.api_key_env);
      be.model_id = b.value("model_id", be.model_id);
      if (b.contains("timeout_ms")) be.timeout = std::chrono::milliseconds(b["timeout_ms"].get<long long>());
      be.max_retries = b.value("max_retries", be.max_retries);
      if (b.contains("initial_backoff_ms")) {
        be.initial_backoff = std::chrono::milliseconds(b["initial_backoff_ms"].get<long long>());
      }
    }
    if (doc.contains("mock_kb")) config.mock_kb_path = doc["mock_kb"].get<std::string>();
    if (doc.contains("taxonomy")) config.taxonomy_path = doc["taxonomy"].get<std::string>();
    if (doc.contains("manifest")) config.manifest_path = doc["manifest"].get<std::string>();
    if (doc.contains("cache")) config.backend.cache_path = doc["cache"].get<std::string>();
    config.max_recall = doc.value("M", config.max_recall);
    if (doc.contains("K")) config.top_k = doc["K"].get<int>();
    if (doc.contains("granularity")) {
      config.granularity = granularity_from_string(doc["granularity"].get<std::string>());
    }
    if (doc.contains("region_mode")) {
      config.region_mode = region_mode_from_string(doc["region_mode"].get<std::string>());
    }
    if (doc.contains("ablation")) {
      config.ablation = AblationFlags::from_name(doc["ablation"].get<std::string>());
    }
    config.seed = doc.value("seed", config.seed);
    config.concurrency = doc.value("concurrency", config.concurrency);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig config;
  config.taxonomy_path = default_taxonomy_path();
  apply_config_json(config, doc);
  return config;
}

nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json j = {
      {"backend",
       {{"base_url", config.backend.base_url},
        {"api_key_env", config.backend.api_key_env},
        {"model_id", config.backend.model_id},
        {"timeout_ms", config.backend.timeout.count()},
        {"max_retries", config.backend.max_retries},
        {"initial_backoff_ms", config.backend.initial_backoff.count()}}},
      {"taxonomy", config.taxonomy_path.string()},
      {"M", config.max_recall},
      {"K", config.effective_top_k()},
      {"granularity", to_string(config.granularity)},
      {"region_mode", to_string(config.region_mode)},
      {"ablation", config.ablation.name()},
      {"seed", config.seed},
      {"concurrency", config.concurrency},
  };
  if (config.mock_kb_path) j["mock_kb"] = config.mock_kb_path->string();
  if (config.manifest_path) j["manifest"] = config.manifest_path->string();
  if (config.backend.cache_path) j["cache"] = config.backend.cache_path->string();
  return j;
}

}  // namespace lama::cli
