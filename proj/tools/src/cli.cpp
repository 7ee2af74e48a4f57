#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "lama/dataset.hpp"
#include "lama/evaluation.hpp"
#include "lama/hashing.hpp"
#include "lama/http_backend.hpp"
#include "lama/mock_backend.hpp"
#include "lama/records.hpp"
#include "lama/report.hpp"
#include "lama/response_cache.hpp"
#include "run_config.hpp"

namespace lama::cli {

namespace {

namespace fs = std::filesystem;

void require_file(const fs::path& path, std::string_view what) {
  if (!fs::is_regular_file(path)) {
    throw IoError(std::string(what) + " not found: " + path.string());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

nlohmann::json read_json_file(const fs::path& path, std::string_view what) {
  require_file(path, what);
  std::ifstream in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Taxonomy load_taxonomy(const fs::path& path) {
  require_file(path, "taxonomy");
  try {
    return Taxonomy::load(path);
  } catch (const TaxonomyError& e) {
    throw ConfigError(e.what());
  }
}

// Flag overrides shared by the commands that build a pipeline.
struct Overrides {
  std::string config_path;
  std::optional<std::string> taxonomy, mock_kb, manifest, cache, granularity, region_mode,
      ablation, model, base_url, api_key_env;
  std::optional<int> max_recall, top_k, max_retries;
  std::optional<long long> timeout_ms;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> concurrency;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON run configuration");
    app->add_option("--taxonomy", taxonomy, "Taxonomy TSV");
    app->add_option("--mock-kb", mock_kb, "Answer from a mock knowledge base instead of a live model");
    app->add_option("--manifest", manifest, "Split manifest (frequency order and bins)");
    app->add_option("--cache", cache, "Response cache file (JSONL)");
    app->add_option("--granularity", granularity, "nationality | region14 | continent6");
    app->add_option("--region-mode", region_mode, "native_prompt | mapped_from_nationality");
    app->add_option("--ablation", ablation, "full | wo_person | wo_media | wo_completion | wo_recall");
    app->add_option("--model", model, "Model id");
    app->add_option("--base-url", base_url, "OpenAI-compatible endpoint");
    app->add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
    app->add_option("-M,--max-recall", max_recall, "People recalled per agent");
    app->add_option("-K,--top-k", top_k, "Ranking length");
    app->add_option("--max-retries", max_retries);
    app->add_option("--timeout-ms", timeout_ms);
    app->add_option("--seed", seed);
    app->add_option("--concurrency", concurrency, "Parallel names and in-flight request cap");
  }

  RunConfig resolve() const {
    RunConfig config;
    config.taxonomy_path = default_taxonomy_path();
    if (!config_path.empty()) config = load_run_config(config_path);
    nlohmann::json doc = nlohmann::json::object();
    if (taxonomy) doc["taxonomy"] = *taxonomy;
    if (mock_kb) doc["mock_kb"] = *mock_kb;
    if (manifest) doc["manifest"] = *manifest;
    if (cache) doc["cache"] = *cache;
    if (granularity) doc["granularity"] = *granularity;
    if (region_mode) doc["region_mode"] = *region_mode;
    if (ablation) doc["ablation"] = *ablation;
    if (model) doc["backend"]["model_id"] = *model;
    if (base_url) doc["backend"]["base_url"] = *base_url;
    if (api_key_env) doc["backend"]["api_key_env"] = *api_key_env;
    if (max_retries) doc["backend"]["max_retries"] = *max_retries;
    if (timeout_ms) doc["backend"]["timeout_ms"] = *timeout_ms;
    if (max_recall) doc["M"] = *max_recall;
    if (top_k) doc["K"] = *top_k;
    if (seed) doc["seed"] = *seed;
    if (concurrency) doc["concurrency"] = *concurrency;
    apply_config_json(config, doc);
    config.validate();
    return config;
  }
};

// Taxonomy, backend stack and padding order for one run configuration.
class Session {
 public:
  explicit Session(RunConfig config)
      : config_(std::move(config)), taxonomy_(load_taxonomy(config_.taxonomy_path)) {
    if (config_.manifest_path) {
      const auto manifest = read_json_file(*config_.manifest_path, "manifest");
      try {
        bins_ = bins_from_manifest(manifest, taxonomy_.nationalities());
      } catch (const std::exception& e) {
        throw ConfigError("manifest " + config_.manifest_path->string() + ": " + e.what());
      }
    }
    if (config_.mock_kb_path) {
      require_file(*config_.mock_kb_path, "mock knowledge base");
      try {
        source_ = std::make_unique<MockChatBackend>(
            MockKnowledgeBase::load(*config_.mock_kb_path, &taxonomy_.nationalities()), &taxonomy_);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    } else {
      source_ = std::make_unique<OpenAiChatBackend>(config_.backend);
    }
    ChatBackend* top = source_.get();
    if (config_.backend.cache_path) {
      cache_ = std::make_unique<ResponseCache>(*config_.backend.cache_path);
      caching_ = std::make_unique<CachingChatBackend>(*top, *cache_);
      top = caching_.get();
    }
    limited_ = std::make_unique<ConcurrencyLimitedBackend>(*top, config_.concurrency);
  }

  const RunConfig& config() const { return config_; }
  const Taxonomy& taxonomy() const { return taxonomy_; }
  const FrequencyBins* bins() const {
    return bins_ && config_.granularity == Granularity::nationality ? &*bins_ : nullptr;
  }

  std::optional<Label> resolve_gold(const std::optional<std::string>& raw) const {
    if (!raw) return std::nullopt;
    if (auto l = taxonomy_.space(config_.granularity).normalize(*raw)) return l;
    if (auto n = taxonomy_.nationalities().normalize(*raw)) {
      return taxonomy_.project(*n, config_.granularity);
    }
    throw IoError("gold label '" + *raw + "' is not a " +
                  std::string(to_string(config_.granularity)) + " label");
  }

  std::vector<PredictionRecord> predict(const std::vector<NameRecord>& names,
                                        const AblationFlags& flags, bool timing) {
    const Granularity target = config_.granularity;
    const bool mapped =
        target != Granularity::nationality && config_.region_mode == RegionMode::mapped_from_nationality;
    const Granularity run_level = mapped ? Granularity::nationality : target;
    const int k = config_.effective_top_k();

    PipelineConfig pipeline;
    pipeline.max_recall = config_.max_recall;
    pipeline.top_k = mapped ? std::max(k, default_top_k(Granularity::nationality)) : k;
    pipeline.granularity = run_level;
    pipeline.ablation = flags;
    pipeline.model_id = config_.backend.model_id;
    pipeline.frequency_order = pad_order(run_level);
    const Predictor predictor(*limited_, taxonomy_.space(run_level), pipeline);

    std::vector<std::string> inputs;
    inputs.reserve(names.size());
    for (const auto& n : names) inputs.push_back(n.name);
    auto results = predict_batch(predictor, inputs, config_.concurrency);

    const auto target_pad = pad_order(target);
    std::vector<PredictionRecord> records;
    records.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
      auto& r = results[i];
      PredictionRecord rec;
      rec.name = std::move(r.name);
      rec.gold = resolve_gold(names[i].gold);
      rec.granularity = target;
      rec.ranking = mapped ? project_ranking(r.ranking, taxonomy_, target, k, target_pad)
                           : std::move(r.ranking);
      rec.recall = std::move(r.recall);
      rec.calls = r.calls;
      if (timing) rec.elapsed = r.elapsed;
      records.push_back(std::move(rec));
    }
    return records;
  }

 private:
  std::vector<Label> pad_order(Granularity g) const {
    if (!bins_) return {};
    std::vector<Label> order;
    for (const auto& nat : bins_->frequency_order) {
      Label l = taxonomy_.project(nat, g);
      if (std::find(order.begin(), order.end(), l) == order.end()) order.push_back(l);
    }
    return order;
  }

  RunConfig config_;
  Taxonomy taxonomy_;
  std::optional<FrequencyBins> bins_;
  std::unique_ptr<ChatBackend> source_;
  std::unique_ptr<ResponseCache> cache_;
  std::unique_ptr<CachingChatBackend> caching_;
  std::unique_ptr<ConcurrencyLimitedBackend> limited_;
};

std::string to_jsonl(const std::vector<PredictionRecord>& records) {
  std::string text;
  for (const auto& r : records) {
    text += to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    text += '\n';
  }
  return text;
}

std::vector<ScoredPrediction> scored_from(const std::vector<PredictionRecord>& records) {
  std::vector<ScoredPrediction> scored;
  scored.reserve(records.size());
  for (const auto& r : records) {
    if (!r.gold) throw IoError("record for '" + r.name + "' has no gold label");
    scored.push_back({*r.gold, r.ranking.labels()});
  }
  return scored;
}

CallSummary calls_from(const std::vector<PredictionRecord>& records) {
  std::vector<PredictionResult> results(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    results[i].ranking = records[i].ranking;
    results[i].calls = records[i].calls;
  }
  return summarize_calls(results);
}

std::vector<NameRecord> load_names(const std::string& path) {
  require_file(path, "names file");
  auto names = read_names_file(path);
  if (names.empty()) throw IoError("names file has no names: " + path);
  return names;
}

// ---- prepare-data ----------------------------------------------------------

struct PrepareArgs {
  std::string raw;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::size_t min_count = kDefaultMinCount;
  std::size_t max_count = kDefaultMaxCount;
};

int cmd_prepare_data(const PrepareArgs& args, std::ostream& out) {
  require_file(args.raw, "raw corpus");
  const auto raw = read_labeled_tsv(args.raw);
  const auto kept = preprocess(raw, args.min_count, args.max_count, args.seed);
  if (kept.empty()) throw DatasetError("no class reaches the minimum count");
  const auto split = stratified_split(kept, {}, args.seed);

  std::vector<std::string> class_names;
  for (const auto& [label, n] : class_counts(kept)) class_names.push_back(label);
  const LabelSpace classes(class_names);
  const auto bins = assign_frequency_bins(split.train, classes);

  PrepareSummary summary{raw.size(), class_counts(raw).size(), kept.size(), classes.size(),
                         split.train.size(), split.validation.size(), split.test.size()};
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  write_labeled_tsv(dir / "train.tsv", split.train);
  write_labeled_tsv(dir / "validation.tsv", split.validation);
  write_labeled_tsv(dir / "test.tsv", split.test);
  write_text(dir / "manifest.json",
             split_manifest(split, bins, summary, args.min_count, args.max_count).dump(2) + "\n");

  out << "classes " << summary.classes << ", samples " << summary.samples << " (train "
      << summary.train << ", validation " << summary.validation << ", test " << summary.test
      << ")\n";
  return kOk;
}

// ---- predict ---------------------------------------------------------------

struct PredictArgs {
  Overrides overrides;
  std::string names_path;
  std::string single_name;
  std::string out_path;
  bool timing = false;
};

int cmd_predict(const PredictArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<NameRecord> names;
  if (!args.single_name.empty()) {
    names.push_back({args.single_name, std::nullopt});
  } else {
    names = load_names(args.names_path);
  }
  Session session(args.overrides.resolve());
  const auto records = session.predict(names, session.config().ablation, args.timing);
  const auto text = to_jsonl(records);
  if (args.out_path.empty()) {
    out << text;
  } else {
    write_text(args.out_path, text);
    const auto calls = calls_from(records);
    err << "predicted " << records.size() << " names, " << calls.fallback_samples
        << " via fallback, " << calls.totals.total() << " calls\n";
  }
  return kOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string predictions;
  std::string manifest;
  std::string taxonomy;
  std::string out_path;
  std::string errors_out;
  std::string label;
  std::string config_path;
  std::vector<int> ks;
  std::size_t top_confusions = 10;
};

int cmd_evaluate(const EvaluateArgs& args, std::ostream& out) {
  const Taxonomy taxonomy =
      load_taxonomy(args.taxonomy.empty() ? default_taxonomy_path() : fs::path(args.taxonomy));
  require_file(args.predictions, "predictions file");
  const auto records = read_prediction_records(args.predictions, taxonomy);
  if (records.empty()) throw IoError("predictions file is empty: " + args.predictions);

  const Granularity granularity = records.front().granularity;
  std::size_t shortest = records.front().ranking.ranks.size();
  for (const auto& r : records) {
    if (r.granularity != granularity) throw IoError("predictions mix granularities");
    shortest = std::min(shortest, r.ranking.ranks.size());
  }
  for (int k : args.ks) {
    if (k < 1 || static_cast<std::size_t>(k) > shortest) {
      throw ConfigError("P@" + std::to_string(k) + " requested but predictions carry K = " +
                        std::to_string(shortest));
    }
  }

  std::optional<FrequencyBins> bins;
  if (!args.manifest.empty() && granularity == Granularity::nationality) {
    bins = bins_from_manifest(read_json_file(args.manifest, "manifest"), taxonomy.nationalities());
  }
  const auto scored = scored_from(records);
  EvalReport report = evaluate(scored, granularity, taxonomy, bins ? &*bins : nullptr,
                               EvalOptions{args.ks, args.top_confusions});
  report.label = args.label.empty() ? fs::path(args.predictions).stem().string() : args.label;
  report.calls = calls_from(records);
  if (!args.config_path.empty()) {
    const RunConfig config = load_run_config(args.config_path);
    PipelineConfig pipeline;
    pipeline.max_recall = config.max_recall;
    pipeline.top_k = config.effective_top_k();
    pipeline.granularity = config.granularity;
    pipeline.ablation = config.ablation;
    pipeline.model_id = config.backend.model_id;
    report.config_fingerprint = config_fingerprint(pipeline, taxonomy, config.seed);
  }

  if (!args.out_path.empty()) write_text(args.out_path, to_json(report).dump(2) + "\n");
  if (!args.errors_out.empty()) write_text(args.errors_out, render_error_dump(records, taxonomy));
  out << render_report(report);
  return kOk;
}

// ---- ablate ----------------------------------------------------------------

struct AblateArgs {
  Overrides overrides;
  std::string names_path;
  std::string out_dir;
  std::vector<std::string> configs;
};

int cmd_ablate(const AblateArgs& args, std::ostream& out) {
  std::vector<std::string> configs = args.configs;
  if (configs.empty()) configs = standard_ablation_names();
  std::vector<AblationFlags> flags;
  for (const auto& c : configs) {
    try {
      flags.push_back(AblationFlags::from_name(c));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  const auto names = load_names(args.names_path);
  Session session(args.overrides.resolve());
  const fs::path dir(args.out_dir);

  std::vector<EvalReport> reports;
  for (const auto& f : flags) {
    const auto records = session.predict(names, f, false);
    const auto scored = scored_from(records);
    EvalReport report = evaluate(scored, session.config().granularity, session.taxonomy(),
                                 session.bins());
    report.label = f.name();
    report.calls = calls_from(records);
    PipelineConfig pipeline;
    pipeline.max_recall = session.config().max_recall;
    pipeline.top_k = session.config().effective_top_k();
    pipeline.granularity = session.config().granularity;
    pipeline.ablation = f;
    pipeline.model_id = session.config().backend.model_id;
    report.config_fingerprint = config_fingerprint(pipeline, session.taxonomy(), session.config().seed);
    write_text(dir / (report.label + ".predictions.jsonl"), to_jsonl(records));
    write_text(dir / (report.label + ".report.json"), to_json(report).dump(2) + "\n");
    reports.push_back(std::move(report));
  }

  std::map<std::string, double> delta;
  nlohmann::json summary = nlohmann::json::object();
  const auto full = std::find_if(reports.begin(), reports.end(),
                                 [](const EvalReport& r) { return r.label == "full"; });
  for (const auto& r : reports) {
    summary[r.label]["accuracy"] = r.accuracy;
    if (full != reports.end()) {
      delta[r.label] = r.accuracy - full->accuracy;
      summary[r.label]["delta_accuracy"] = delta[r.label];
    }
  }
  const auto table = render_ablation_table(reports, delta);
  write_text(dir / "ablation.txt", table);
  write_text(dir / "ablation.json", summary.dump(2) + "\n");
  out << table;
  return kOk;
}

// ---- render-report ---------------------------------------------------------

struct RenderArgs {
  std::vector<std::string> reports;
  std::string taxonomy;
  bool average = false;
};

EvalReport average_of(const std::vector<EvalReport>& reports) {
  EvalReport mean = reports.front();
  mean.label = "mean of " + std::to_string(reports.size());
  mean.per_bin.reset();
  mean.region_decomposition.reset();
  mean.calls.reset();
  mean.confusion = {};
  mean.config_fingerprint.clear();
  const double n = static_cast<double>(reports.size());
  mean.accuracy = 0;
  mean.macro_f1 = 0;
  for (auto& [k, v] : mean.precision_at) v = 0;
  for (const auto& r : reports) {
    mean.accuracy += r.accuracy / n;
    mean.macro_f1 += r.macro_f1 / n;
    for (auto it = mean.precision_at.begin(); it != mean.precision_at.end();) {
      auto found = r.precision_at.find(it->first);
      if (found == r.precision_at.end()) {
        it = mean.precision_at.erase(it);
      } else {
        it->second += found->second / n;
        ++it;
      }
    }
  }
  return mean;
}

int cmd_render_report(const RenderArgs& args, std::ostream& out) {
  const Taxonomy taxonomy =
      load_taxonomy(args.taxonomy.empty() ? default_taxonomy_path() : fs::path(args.taxonomy));
  std::vector<EvalReport> reports;
  for (const auto& path : args.reports) {
    try {
      reports.push_back(eval_report_from_json(read_json_file(path, "report"), taxonomy));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ": " + e.what());
    }
  }
  if (reports.size() == 1 && !args.average) {
    out << render_report(reports.front());
    return kOk;
  }
  auto rows = reports;
  if (args.average) rows.push_back(average_of(reports));
  out << render_metrics_table(rows);
  const bool any_bins = std::any_of(reports.begin(), reports.end(),
                                    [](const EvalReport& r) { return r.per_bin.has_value(); });
  const bool any_regions = std::any_of(reports.begin(), reports.end(), [](const EvalReport& r) {
    return r.region_decomposition.has_value();
  });
  if (any_bins) out << '\n' << render_bin_table(reports);
  if (any_regions) out << '\n' << render_region_table(reports);
  return kOk;
}

int report_error(std::ostream& err, int code, const std::string& message) {
  err << "lama: " << message << '\n';
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nationality prediction from names via associative recall"};
  app.name("lama");
  app.require_subcommand(1);

  PrepareArgs prepare;
  auto* prepare_cmd = app.add_subcommand("prepare-data", "Filter and split a raw name corpus");
  prepare_cmd->add_option("--raw", prepare.raw, "name<TAB>nationality corpus")->required();
  prepare_cmd->add_option("--out-dir", prepare.out_dir, "Output directory")->required();
  prepare_cmd->add_option("--seed", prepare.seed);
  prepare_cmd->add_option("--min-count", prepare.min_count);
  prepare_cmd->add_option("--max-count", prepare.max_count);

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Predict Top-K labels for names");
  predict.overrides.attach(predict_cmd);
  auto* names_opt = predict_cmd->add_option("--names", predict.names_path, "Names file");
  auto* name_opt = predict_cmd->add_option("--name", predict.single_name, "A single name");
  names_opt->excludes(name_opt);
  predict_cmd->add_option("--out", predict.out_path, "Predictions JSONL (default: stdout)");
  predict_cmd->add_flag("--timing", predict.timing, "Record per-name wall time");

  EvaluateArgs evaluate_args;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a predictions file");
  evaluate_cmd->add_option("--predictions", evaluate_args.predictions)->required();
  evaluate_cmd->add_option("--manifest", evaluate_args.manifest, "Split manifest for frequency bins");
  evaluate_cmd->add_option("--taxonomy", evaluate_args.taxonomy);
  evaluate_cmd->add_option("--out", evaluate_args.out_path, "Report JSON");
  evaluate_cmd->add_option("--errors-out", evaluate_args.errors_out, "Misclassified samples (TSV)");
  evaluate_cmd->add_option("--label", evaluate_args.label, "Row label in tables");
  evaluate_cmd->add_option("--config", evaluate_args.config_path, "Run config for the fingerprint");
  evaluate_cmd->add_option("--k", evaluate_args.ks, "Precision@K cutoffs")->delimiter(',');
  evaluate_cmd->add_option("--top-confusions", evaluate_args.top_confusions);

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run and score ablation configurations");
  ablate.overrides.attach(ablate_cmd);
  ablate_cmd->add_option("--names", ablate.names_path, "Names file with gold labels")->required();
  ablate_cmd->add_option("--out-dir", ablate.out_dir)->required();
  ablate_cmd->add_option("--configs", ablate.configs, "Comma-separated configurations")
      ->delimiter(',');

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render-report", "Render report JSON files as tables");
  render_cmd->add_option("reports", render.reports, "Report JSON files")->required();
  render_cmd->add_option("--taxonomy", render.taxonomy);
  render_cmd->add_flag("--average", render.average, "Append the mean over all reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (*prepare_cmd) return cmd_prepare_data(prepare, out);
    if (*predict_cmd) {
      if (predict.names_path.empty() && predict.single_name.empty()) {
        throw ConfigError("predict needs --names or --name");
      }
      return cmd_predict(predict, out, err);
    }
    if (*evaluate_cmd) return cmd_evaluate(evaluate_args, out);
    if (*ablate_cmd) return cmd_ablate(ablate, out);
    if (*render_cmd) return cmd_render_report(render, out);
  } catch (const ConfigError& e) {
    return report_error(err, kConfigError, e.what());
  } catch (const TaxonomyError& e) {
    return report_error(err, kConfigError, e.what());
  } catch (const IoError& e) {
    return report_error(err, kIoError, e.what());
  } catch (const DatasetError& e) {
    return report_error(err, kIoError, e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error(err, kIoError, e.what());
  } catch (const BackendError& e) {
    return report_error(err, kBackendError, e.what());
  } catch (const std::invalid_argument& e) {
    return report_error(err, kConfigError, e.what());
  } catch (const std::exception& e) {
    return report_error(err, kInternalError, e.what());
  }
  return kInternalError;
}

}  // namespace lama::cli
