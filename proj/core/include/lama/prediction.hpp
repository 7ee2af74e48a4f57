#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lama/aggregation.hpp"
#include "lama/llm_backend.hpp"
#include "lama/recall_agents.hpp"
#include "lama/taxonomy.hpp"

namespace lama {

enum class Provenance { vote, recall_residual, completion, direct, pad };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct RankedLabel {
  Label label;
  Provenance provenance = Provenance::pad;
  friend bool operator==(const RankedLabel&, const RankedLabel&) = default;
};

struct PredictionRanking {
  std::vector<RankedLabel> ranks;  // exactly K, duplicate-free
  bool used_fallback = false;      // recall set was empty

  std::vector<Label> labels() const;
  friend bool operator==(const PredictionRanking&, const PredictionRanking&) = default;
};

// Per-sample LLM call counts. Re-asks after unparseable output are tracked
// separately and excluded from total().
struct CallAccounting {
  int recall_calls = 0;
  int direct_calls = 0;
  int completion_calls = 0;
  int reprompt_calls = 0;

  int total() const noexcept { return recall_calls + direct_calls + completion_calls; }
  CallAccounting& operator+=(const CallAccounting& other);
  friend bool operator==(const CallAccounting&, const CallAccounting&) = default;
};

struct AblationFlags {
  bool drop_person_agent = false;
  bool drop_media_agent = false;
  bool drop_completion = false;
  bool drop_recall = false;  // same as dropping both agents

  bool person_enabled() const noexcept { return !drop_person_agent && !drop_recall; }
  bool media_enabled() const noexcept { return !drop_media_agent && !drop_recall; }

  // "full", "wo_person", "wo_media", "wo_completion", "wo_recall", or a
  // '+'-joined combination such as "wo_person+wo_completion".
  std::string name() const;
  static AblationFlags from_name(std::string_view name);
  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

// The five standard ablation configurations, in report order.
const std::vector<std::string>& standard_ablation_names();

int default_top_k(Granularity g);

struct PipelineConfig {
  int max_recall = kDefaultMaxRecall;  // M
  int top_k = 5;                       // K
  Granularity granularity = Granularity::nationality;
  AblationFlags ablation;
  std::string model_id = "gpt-4.1-mini";
  // Padding order (most frequent first). Empty means label-space order.
  std::vector<Label> frequency_order;

  void validate(const LabelSpace& labels) const;
};

// Appends labels from `frequency_order` (then the rest of `labels` in set
// order) that are not already present, until there are K. Throws
// std::invalid_argument when K exceeds the label-set size.
std::vector<Label> pad_ranking(std::vector<Label> existing, int top_k, const LabelSpace& labels,
                               std::span<const Label> frequency_order = {});

// (top1) + Unique(residual + completion), truncated to K and padded.
// Residual labels that reappear in the completion keep residual provenance.
PredictionRanking assemble_ranking(const Label& top1, std::span<const Label> residual,
                                   std::span<const Label> completion, int top_k,
                                   const LabelSpace& labels,
                                   std::span<const Label> frequency_order = {},
                                   Provenance top1_provenance = Provenance::vote,
                                   Provenance completion_provenance = Provenance::completion);

struct DirectPrediction {
  std::vector<Label> labels;    // always K long (padded)
  std::size_t valid_count = 0;  // labels that came from the model
  int calls = 0;
  int reprompts = 0;
};

// Zero-shot Top-K prediction used when recall comes back empty. Re-asks once
// (cache bypassed) when fewer than K valid labels result, then pads. Backend
// errors propagate.
DirectPrediction direct_predict(std::string_view name, const RecallContext& ctx, int top_k,
                                std::span<const Label> frequency_order = {});

struct CompletionResult {
  std::vector<Label> labels;  // at most K-1, excludes top1
  int calls = 0;
  int reprompts = 0;
  bool failed = false;
};

// Asks for ranks 2..K given the fixed rank-1 label. Uses the recall-context
// user prompt when `recall` is non-empty and the simplified one otherwise.
// Backend errors yield an empty list.
CompletionResult complete_ranks(std::string_view name, const RecallSet& recall, const Label& top1,
                                const RecallContext& ctx, int top_k);

struct PredictionResult {
  std::string name;
  PredictionRanking ranking;
  RecallSet recall;
  CallAccounting calls;
  std::chrono::milliseconds elapsed{0};
};

// Full pipeline: dual recall, vote, fallback, completion, assembly.
// Reentrant; one instance can serve many threads.
class Predictor {
 public:
  Predictor(ChatBackend& backend, const LabelSpace& labels, PipelineConfig config);

  PredictionResult predict(std::string_view name) const;

  const PipelineConfig& config() const noexcept { return config_; }
  const LabelSpace& labels() const noexcept { return labels_; }

 private:
  ChatBackend& backend_;
  const LabelSpace& labels_;
  PipelineConfig config_;
};

// Runs predict() over `names` on up to `concurrency` worker threads. Results
// come back in input order. The first exception is rethrown after all
// workers stop.
std::vector<PredictionResult> predict_batch(const Predictor& predictor,
                                            std::span<const std::string> names,
                                            std::size_t concurrency);

// Maps a nationality ranking onto regions or continents: project each rank,
// drop repeats, truncate to K and pad from `pad_order`.
PredictionRanking project_ranking(const PredictionRanking& ranking, const Taxonomy& taxonomy,
                                  Granularity target, int top_k,
                                  std::span<const Label> pad_order = {});

}  // namespace lama
