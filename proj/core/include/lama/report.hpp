#pragma once

#include <map>
#include <string>
#include <vector>

#include "lama/evaluation.hpp"
#include "lama/records.hpp"

namespace lama {

// Plain-text result tables.

// Method | Accuracy | Macro-F1 | P@k...
std::string render_metrics_table(const std::vector<EvalReport>& reports);

// Configuration | Accuracy | Macro-F1 | P@3 | P@5 | dAcc
std::string render_ablation_table(const std::vector<EvalReport>& reports,
                                  const std::map<std::string, double>& delta_accuracy);

// True -> Pred | Count | Same, followed by the region match rate.
std::string render_confusion_table(const ConfusionSummary& summary);

// Nat Correct | Nat Wrong Reg Correct | Nat Wrong Reg Wrong | Region Accuracy
std::string render_region_table(const std::vector<EvalReport>& reports);

// Head / Mid / Tail accuracy and relative drop.
std::string render_bin_table(const std::vector<EvalReport>& reports);

// Every section that applies to the report.
std::string render_report(const EvalReport& report);

// Per-sample error dump: name, gold, prediction, region-match flag (TSV with
// header). Only misclassified samples are written.
std::string render_error_dump(const std::vector<PredictionRecord>& records,
                              const Taxonomy& taxonomy);

}  // namespace lama
