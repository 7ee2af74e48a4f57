#include "lama/evaluation.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_map>

#include "lama/hashing.hpp"

namespace lama {

namespace {

void require_non_empty(std::span<const ScoredPrediction> preds, const char* what) {
  if (preds.empty()) throw EvaluationError(std::string(what) + ": empty prediction set");
}

const Label& top1_of(const ScoredPrediction& p) {
  if (p.ranks.empty()) throw EvaluationError("prediction with an empty ranking");
  return p.ranks.front();
}

double ratio(std::size_t num, std::size_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

double accuracy(std::span<const ScoredPrediction> preds) {
  require_non_empty(preds, "accuracy");
  std::size_t hits = 0;
  for (const auto& p : preds) hits += top1_of(p) == p.gold ? 1 : 0;
  return ratio(hits, preds.size());
}

double macro_f1(std::span<const ScoredPrediction> preds, std::span<const Label> classes) {
  if (classes.empty()) throw EvaluationError("macro_f1: empty label set");
  std::unordered_map<Label, std::size_t> tp, predicted, actual;
  for (const auto& p : preds) {
    const Label& guess = top1_of(p);
    ++predicted[guess];
    ++actual[p.gold];
    if (guess == p.gold) ++tp[guess];
  }
  auto get = [](const auto& m, const Label& l) {
    auto it = m.find(l);
    return it == m.end() ? std::size_t{0} : it->second;
  };
  double sum = 0;
  for (const auto& c : classes) {
    const auto t = get(tp, c);
    const auto np = get(predicted, c);
    const auto na = get(actual, c);
    const double precision = np == 0 ? 0.0 : ratio(t, np);
    const double recall = na == 0 ? 0.0 : ratio(t, na);
    if (precision + recall > 0) sum += 2 * precision * recall / (precision + recall);
  }
  return sum / static_cast<double>(classes.size());
}

double macro_f1(std::span<const ScoredPrediction> preds, const LabelSpace& labels) {
  return macro_f1(preds, std::span<const Label>(labels.labels()));
}

double precision_at_k(std::span<const ScoredPrediction> preds, int k) {
  require_non_empty(preds, "precision_at_k");
  if (k < 1) throw EvaluationError("precision_at_k: K must be >= 1");
  const auto kk = static_cast<std::size_t>(k);
  std::size_t hits = 0;
  for (const auto& p : preds) {
    if (p.ranks.size() < kk) {
      throw EvaluationError("precision_at_k: ranking of length " + std::to_string(p.ranks.size()) +
                            " is shorter than K = " + std::to_string(k));
    }
    hits += std::find(p.ranks.begin(), p.ranks.begin() + k, p.gold) != p.ranks.begin() + k ? 1 : 0;
  }
  return ratio(hits, preds.size());
}

std::optional<double> relative_drop(std::optional<double> head_accuracy,
                                    std::optional<double> tail_accuracy) {
  if (!head_accuracy || !tail_accuracy || *head_accuracy == 0) return std::nullopt;
  return (*head_accuracy - *tail_accuracy) / *head_accuracy;
}

BinReport bin_stratified_eval(std::span<const ScoredPrediction> preds, const FrequencyBins& bins) {
  std::vector<ScoredPrediction> head, mid, tail;
  for (const auto& p : preds) {
    if (!bins.contains(p.gold)) {
      throw EvaluationError("gold label '" + p.gold.str() + "' is not in any frequency bin");
    }
    switch (bins.bin_of(p.gold)) {
      case FrequencyBins::Bin::head: head.push_back(p); break;
      case FrequencyBins::Bin::mid: mid.push_back(p); break;
      case FrequencyBins::Bin::tail: tail.push_back(p); break;
    }
  }
  auto metrics = [](const std::vector<ScoredPrediction>& part, const std::vector<Label>& classes) {
    BinMetrics m;
    m.samples = part.size();
    if (!part.empty()) {
      m.accuracy = accuracy(part);
      m.macro_f1 = macro_f1(part, std::span<const Label>(classes));
    }
    return m;
  };
  BinReport report{metrics(head, bins.head), metrics(mid, bins.mid), metrics(tail, bins.tail), {}};
  report.relative_drop = relative_drop(report.head.accuracy, report.tail.accuracy);
  return report;
}

ConfusionSummary confusion_pairs(std::span<const ScoredPrediction> preds, const Taxonomy& taxonomy,
                                 std::size_t top_n) {
  std::map<std::pair<Label, Label>, std::size_t> counts;
  for (const auto& p : preds) {
    const Label& guess = top1_of(p);
    if (guess != p.gold) ++counts[{p.gold, guess}];
  }
  const auto& nats = taxonomy.nationalities();
  ConfusionSummary summary;
  bool regional = true;
  for (const auto& [key, n] : counts) {
    const auto& [gold, pred] = key;
    const bool known = nats.contains(gold) && nats.contains(pred);
    regional = regional && known;
    summary.pairs.push_back(
        {gold, pred, n, known && taxonomy.region_of(gold) == taxonomy.region_of(pred)});
  }
  std::stable_sort(summary.pairs.begin(), summary.pairs.end(),
                   [](const ConfusionPair& a, const ConfusionPair& b) {
                     if (a.count != b.count) return a.count > b.count;
                     return std::tie(a.true_label, a.predicted_label) <
                            std::tie(b.true_label, b.predicted_label);
                   });
  if (summary.pairs.size() > top_n) summary.pairs.resize(top_n);
  if (!summary.pairs.empty() && regional) {
    const auto same = std::count_if(summary.pairs.begin(), summary.pairs.end(),
                                    [](const ConfusionPair& p) { return p.same_region; });
    summary.region_match_rate = ratio(static_cast<std::size_t>(same), summary.pairs.size());
  }
  return summary;
}

RegionDecomposition region_level_breakdown(std::span<const ScoredPrediction> preds,
                                           const Taxonomy& taxonomy) {
  require_non_empty(preds, "region_level_breakdown");
  std::size_t correct = 0, same_region = 0, other_region = 0;
  for (const auto& p : preds) {
    const Label& guess = top1_of(p);
    if (guess == p.gold) {
      ++correct;
    } else if (taxonomy.region_of(guess) == taxonomy.region_of(p.gold)) {
      ++same_region;
    } else {
      ++other_region;
    }
  }
  const std::size_t n = preds.size();
  return {ratio(correct, n), ratio(same_region, n), ratio(other_region, n),
          ratio(correct + same_region, n)};
}

double direct_region_accuracy(std::span<const ScoredPrediction> preds, const Taxonomy& taxonomy) {
  require_non_empty(preds, "direct_region_accuracy");
  std::size_t hits = 0;
  for (const auto& p : preds) {
    hits += taxonomy.region_of(top1_of(p)) == taxonomy.region_of(p.gold) ? 1 : 0;
  }
  return ratio(hits, preds.size());
}

CallSummary summarize_calls(std::span<const PredictionResult> results) {
  CallSummary summary;
  summary.samples = results.size();
  for (const auto& r : results) {
    summary.totals += r.calls;
    summary.fallback_samples += r.ranking.used_fallback ? 1 : 0;
  }
  if (!results.empty()) {
    summary.mean_total_calls =
        ratio(static_cast<std::size_t>(summary.totals.total()), results.size());
  }
  return summary;
}

EvalReport evaluate(std::span<const ScoredPrediction> preds, Granularity granularity,
                    const Taxonomy& taxonomy, const FrequencyBins* bins,
                    const EvalOptions& options) {
  require_non_empty(preds, "evaluate");
  EvalReport report;
  report.granularity = granularity;
  report.samples = preds.size();
  report.accuracy = accuracy(preds);
  report.macro_f1 = macro_f1(preds, taxonomy.space(granularity));

  std::vector<int> ks = options.ks;
  if (ks.empty()) {
    std::size_t shortest = preds.front().ranks.size();
    for (const auto& p : preds) shortest = std::min(shortest, p.ranks.size());
    const std::vector<int> defaults =
        granularity == Granularity::nationality ? std::vector<int>{1, 3, 5} : std::vector<int>{1, 2, 3};
    for (int k : defaults) {
      if (static_cast<std::size_t>(k) <= shortest) ks.push_back(k);
    }
  }
  for (int k : ks) report.precision_at[k] = precision_at_k(preds, k);

  if (bins) report.per_bin = bin_stratified_eval(preds, *bins);
  report.confusion = confusion_pairs(preds, taxonomy, options.top_confusions);
  if (granularity == Granularity::nationality) {
    report.region_decomposition = region_level_breakdown(preds, taxonomy);
  }
  return report;
}

namespace {

nlohmann::json bin_json(const BinMetrics& m) {
  return {{"samples", m.samples}, {"accuracy", optional_json(m.accuracy)},
          {"macro_f1", optional_json(m.macro_f1)}};
}

BinMetrics bin_from_json(const nlohmann::json& j) {
  return {j.at("samples").get<std::size_t>(), optional_from(j, "accuracy"),
          optional_from(j, "macro_f1")};
}

}  // namespace

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json precision = nlohmann::json::object();
  for (const auto& [k, v] : report.precision_at) precision[std::to_string(k)] = v;

  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : report.confusion.pairs) {
    pairs.push_back({{"true", p.true_label.str()},
                     {"predicted", p.predicted_label.str()},
                     {"count", p.count},
                     {"same_region", p.same_region}});
  }

  nlohmann::json j = {
      {"label", report.label},
      {"granularity", to_string(report.granularity)},
      {"samples", report.samples},
      {"accuracy", report.accuracy},
      {"macro_f1", report.macro_f1},
      {"precision_at", std::move(precision)},
      {"confusion",
       {{"pairs", std::move(pairs)},
        {"region_match_rate", optional_json(report.confusion.region_match_rate)}}},
      {"config_fingerprint", report.config_fingerprint},
  };
  if (report.per_bin) {
    j["per_bin"] = {{"head", bin_json(report.per_bin->head)},
                    {"mid", bin_json(report.per_bin->mid)},
                    {"tail", bin_json(report.per_bin->tail)},
                    {"relative_drop", optional_json(report.per_bin->relative_drop)}};
  }
  if (report.region_decomposition) {
    const auto& d = *report.region_decomposition;
    j["region_decomposition"] = {{"nat_correct", d.nat_correct},
                                 {"nat_wrong_region_correct", d.nat_wrong_region_correct},
                                 {"nat_wrong_region_wrong", d.nat_wrong_region_wrong},
                                 {"region_accuracy", d.region_accuracy}};
  }
  if (report.calls) {
    const auto& c = *report.calls;
    j["calls"] = {{"samples", c.samples},
                  {"fallback_samples", c.fallback_samples},
                  {"recall", c.totals.recall_calls},
                  {"direct", c.totals.direct_calls},
                  {"completion", c.totals.completion_calls},
                  {"reprompt", c.totals.reprompt_calls},
                  {"total", c.totals.total()},
                  {"mean_total_calls", c.mean_total_calls}};
  }
  return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j, const Taxonomy& taxonomy) {
  EvalReport report;
  report.label = j.value("label", std::string());
  report.granularity = granularity_from_string(j.at("granularity").get<std::string>());
  report.samples = j.at("samples").get<std::size_t>();
  report.accuracy = j.at("accuracy").get<double>();
  report.macro_f1 = j.at("macro_f1").get<double>();
  for (const auto& [k, v] : j.at("precision_at").items()) {
    report.precision_at[std::stoi(k)] = v.get<double>();
  }
  const LabelSpace& space = taxonomy.space(report.granularity);
  if (j.contains("confusion")) {
    const auto& c = j["confusion"];
    for (const auto& p : c.at("pairs")) {
      report.confusion.pairs.push_back({space.at(p.at("true").get<std::string>()),
                                        space.at(p.at("predicted").get<std::string>()),
                                        p.at("count").get<std::size_t>(),
                                        p.at("same_region").get<bool>()});
    }
    report.confusion.region_match_rate = optional_from(c, "region_match_rate");
  }
  if (j.contains("per_bin")) {
    const auto& b = j["per_bin"];
    report.per_bin = BinReport{bin_from_json(b.at("head")), bin_from_json(b.at("mid")),
                               bin_from_json(b.at("tail")), optional_from(b, "relative_drop")};
  }
  if (j.contains("region_decomposition")) {
    const auto& d = j["region_decomposition"];
    report.region_decomposition =
        RegionDecomposition{d.at("nat_correct").get<double>(),
                            d.at("nat_wrong_region_correct").get<double>(),
                            d.at("nat_wrong_region_wrong").get<double>(),
                            d.at("region_accuracy").get<double>()};
  }
  if (j.contains("calls")) {
    const auto& c = j["calls"];
    CallSummary s;
    s.samples = c.at("samples").get<std::size_t>();
    s.fallback_samples = c.at("fallback_samples").get<std::size_t>();
    s.totals.recall_calls = c.at("recall").get<int>();
    s.totals.direct_calls = c.at("direct").get<int>();
    s.totals.completion_calls = c.at("completion").get<int>();
    s.totals.reprompt_calls = c.at("reprompt").get<int>();
    s.mean_total_calls = c.at("mean_total_calls").get<double>();
    report.calls = s;
  }
  report.config_fingerprint = j.value("config_fingerprint", std::string());
  return report;
}

std::string config_fingerprint(const PipelineConfig& config, const Taxonomy& taxonomy,
                               std::uint64_t seed) {
  const nlohmann::json canonical = {
      {"model_id", config.model_id},
      {"max_recall", config.max_recall},
      {"top_k", config.top_k},
      {"granularity", to_string(config.granularity)},
      {"ablation", config.ablation.name()},
      {"seed", seed},
      {"taxonomy", taxonomy.fingerprint()},
  };
  return sha256_hex(canonical.dump()).substr(0, 16);
}

std::map<std::string, AblationRun> run_ablation(std::span<const NamedSample> test_set,
                                                std::span<const std::string> configs,
                                                ChatBackend& backend, const Taxonomy& taxonomy,
                                                const PipelineConfig& base,
                                                std::size_t concurrency,
                                                const FrequencyBins* bins, std::uint64_t seed) {
  std::vector<std::string> names;
  names.reserve(test_set.size());
  for (const auto& s : test_set) names.push_back(s.name);

  std::map<std::string, AblationRun> runs;
  for (const auto& config_name : configs) {
    PipelineConfig config = base;
    config.ablation = AblationFlags::from_name(config_name);
    const Predictor predictor(backend, taxonomy.space(config.granularity), config);

    AblationRun run;
    run.results = predict_batch(predictor, names, concurrency);
    std::vector<ScoredPrediction> scored;
    scored.reserve(test_set.size());
    for (std::size_t i = 0; i < test_set.size(); ++i) {
      scored.push_back({test_set[i].gold, run.results[i].ranking.labels()});
    }
    run.report = evaluate(scored, config.granularity, taxonomy, bins);
    run.report.label = config.ablation.name();
    run.report.calls = summarize_calls(run.results);
    run.report.config_fingerprint = config_fingerprint(config, taxonomy, seed);
    runs[run.report.label] = std::move(run);
  }
  if (auto full = runs.find("full"); full != runs.end()) {
    const double reference = full->second.report.accuracy;
    for (auto& [name, run] : runs) run.delta_accuracy = run.report.accuracy - reference;
  }
  return runs;
}

}  // namespace lama
