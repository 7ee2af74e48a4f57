#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lama/dataset.hpp"
#include "lama/prediction.hpp"
#include "lama/taxonomy.hpp"

namespace lama {

class EvaluationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Gold label plus the ranked prediction for one test sample.
struct ScoredPrediction {
  Label gold;
  std::vector<Label> ranks;
};

// Top-1 correct rate. Throws EvaluationError on empty input.
double accuracy(std::span<const ScoredPrediction> preds);

// Unweighted mean of per-class F1 over `labels`, from Top-1 predictions.
// F1_i = 0 whenever P_i + R_i = 0 (including classes with no predictions or
// no gold instances).
double macro_f1(std::span<const ScoredPrediction> preds, const LabelSpace& labels);
double macro_f1(std::span<const ScoredPrediction> preds, std::span<const Label> classes);

// Fraction of samples whose gold label is among the first K ranks. Throws
// EvaluationError if any ranking is shorter than K.
double precision_at_k(std::span<const ScoredPrediction> preds, int k);

struct BinMetrics {
  std::size_t samples = 0;
  std::optional<double> accuracy;  // absent for an empty bin
  std::optional<double> macro_f1;
};

struct BinReport {
  BinMetrics head, mid, tail;
  std::optional<double> relative_drop;  // (head - tail) / head
};

// relative_drop = (head_acc - tail_acc) / head_acc.
std::optional<double> relative_drop(std::optional<double> head_accuracy,
                                    std::optional<double> tail_accuracy);

BinReport bin_stratified_eval(std::span<const ScoredPrediction> preds, const FrequencyBins& bins);

struct ConfusionPair {
  Label true_label;
  Label predicted_label;
  std::size_t count = 0;
  bool same_region = false;
};

struct ConfusionSummary {
  std::vector<ConfusionPair> pairs;
  std::optional<double> region_match_rate;  // absent when there are no pairs
};

// Off-diagonal (gold, top-1) counts, sorted by count desc then gold, pred.
ConfusionSummary confusion_pairs(std::span<const ScoredPrediction> preds, const Taxonomy& taxonomy,
                                 std::size_t top_n = 10);

struct RegionDecomposition {
  double nat_correct = 0;
  double nat_wrong_region_correct = 0;
  double nat_wrong_region_wrong = 0;
  double region_accuracy = 0;  // nat_correct + nat_wrong_region_correct
};

RegionDecomposition region_level_breakdown(std::span<const ScoredPrediction> preds,
                                           const Taxonomy& taxonomy);

// Fraction of samples whose top-1 shares the gold label's region, computed
// directly rather than through the decomposition.
double direct_region_accuracy(std::span<const ScoredPrediction> preds, const Taxonomy& taxonomy);

struct CallSummary {
  std::size_t samples = 0;
  std::size_t fallback_samples = 0;
  CallAccounting totals;
  double mean_total_calls = 0;
};

CallSummary summarize_calls(std::span<const PredictionResult> results);

struct EvalReport {
  std::string label;  // e.g. ablation name
  Granularity granularity = Granularity::nationality;
  std::size_t samples = 0;
  double accuracy = 0;
  double macro_f1 = 0;
  std::map<int, double> precision_at;
  std::optional<BinReport> per_bin;
  ConfusionSummary confusion;
  std::optional<RegionDecomposition> region_decomposition;
  std::optional<CallSummary> calls;
  std::string config_fingerprint;
};

struct EvalOptions {
  std::vector<int> ks;  // empty: {1,3,5} for nationality, {1,2,3} otherwise
  std::size_t top_confusions = 10;
};

// `taxonomy` drives confusion region flags and the region decomposition
// (nationality granularity only). `bins` is optional.
EvalReport evaluate(std::span<const ScoredPrediction> preds, Granularity granularity,
                    const Taxonomy& taxonomy, const FrequencyBins* bins = nullptr,
                    const EvalOptions& options = {});

nlohmann::json to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j, const Taxonomy& taxonomy);

// Stable hash over everything that determines a run's numbers.
std::string config_fingerprint(const PipelineConfig& config, const Taxonomy& taxonomy,
                               std::uint64_t seed);

struct AblationRun {
  std::vector<PredictionResult> results;
  EvalReport report;
  double delta_accuracy = 0;  // vs. the "full" configuration, when present
};

struct NamedSample {
  std::string name;
  Label gold;
};

// Runs the pipeline once per ablation config on the same inputs and
// evaluates each. Configurations share `backend` (and thus its cache).
std::map<std::string, AblationRun> run_ablation(std::span<const NamedSample> test_set,
                                                std::span<const std::string> configs,
                                                ChatBackend& backend, const Taxonomy& taxonomy,
                                                const PipelineConfig& base,
                                                std::size_t concurrency = 1,
                                                const FrequencyBins* bins = nullptr,
                                                std::uint64_t seed = 0);

}  // namespace lama
