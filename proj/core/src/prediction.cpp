#include "lama/prediction.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "lama/hashing.hpp"
#include "lama/prompts.hpp"

namespace lama {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::vote: return "vote";
    case Provenance::recall_residual: return "recall_residual";
    case Provenance::completion: return "completion";
    case Provenance::direct: return "direct";
    case Provenance::pad: return "pad";
  }
  return "?";
}

Provenance provenance_from_string(std::string_view s) {
  for (auto p : {Provenance::vote, Provenance::recall_residual, Provenance::completion,
                 Provenance::direct, Provenance::pad}) {
    if (to_string(p) == s) return p;
  }
  throw std::invalid_argument("unknown provenance '" + std::string(s) + "'");
}

std::vector<Label> PredictionRanking::labels() const {
  std::vector<Label> out;
  out.reserve(ranks.size());
  for (const auto& r : ranks) out.push_back(r.label);
  return out;
}

CallAccounting& CallAccounting::operator+=(const CallAccounting& other) {
  recall_calls += other.recall_calls;
  direct_calls += other.direct_calls;
  completion_calls += other.completion_calls;
  reprompt_calls += other.reprompt_calls;
  return *this;
}

std::string AblationFlags::name() const {
  std::vector<std::string> parts;
  if (drop_recall || (drop_person_agent && drop_media_agent)) {
    parts.emplace_back("wo_recall");
  } else {
    if (drop_person_agent) parts.emplace_back("wo_person");
    if (drop_media_agent) parts.emplace_back("wo_media");
  }
  if (drop_completion) parts.emplace_back("wo_completion");
  if (parts.empty()) return "full";
  std::string out = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) out += "+" + parts[i];
  return out;
}

AblationFlags AblationFlags::from_name(std::string_view name) {
  AblationFlags flags;
  const std::string all(name);
  std::size_t start = 0;
  while (start <= all.size()) {
    const auto end = all.find('+', start);
    const std::string part =
        ascii_lower(trim(std::string_view(all).substr(start, end == std::string::npos
                                                                 ? std::string::npos
                                                                 : end - start)));
    if (part == "full") {
    } else if (part == "wo_person") {
      flags.drop_person_agent = true;
    } else if (part == "wo_media") {
      flags.drop_media_agent = true;
    } else if (part == "wo_completion") {
      flags.drop_completion = true;
    } else if (part == "wo_recall") {
      flags.drop_recall = true;
    } else {
      throw std::invalid_argument("unknown ablation config '" + part +
                                  "' (valid: full, wo_person, wo_media, wo_completion, wo_recall)");
    }
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return flags;
}

const std::vector<std::string>& standard_ablation_names() {
  static const std::vector<std::string> kNames = {"full", "wo_person", "wo_media",
                                                  "wo_completion", "wo_recall"};
  return kNames;
}

int default_top_k(Granularity g) { return g == Granularity::nationality ? 5 : 3; }

void PipelineConfig::validate(const LabelSpace& labels) const {
  if (max_recall < 1) throw std::invalid_argument("config: M must be >= 1");
  if (top_k < 1) throw std::invalid_argument("config: K must be >= 1");
  if (static_cast<std::size_t>(top_k) > labels.size()) {
    throw std::invalid_argument("config: K = " + std::to_string(top_k) + " exceeds the " +
                                std::to_string(labels.size()) + "-label set");
  }
  for (const auto& l : frequency_order) {
    if (!labels.contains(l)) {
      throw std::invalid_argument("config: frequency order has foreign label '" + l.str() + "'");
    }
  }
}

std::vector<Label> pad_ranking(std::vector<Label> existing, int top_k, const LabelSpace& labels,
                               std::span<const Label> frequency_order) {
  if (top_k < 0 || static_cast<std::size_t>(top_k) > labels.size()) {
    throw std::invalid_argument("pad_ranking: cannot pad to " + std::to_string(top_k) +
                                " beyond the label-set size " + std::to_string(labels.size()));
  }
  std::unordered_set<Label> present(existing.begin(), existing.end());
  auto take_from = [&](auto&& order) {
    for (const auto& l : order) {
      if (existing.size() >= static_cast<std::size_t>(top_k)) return;
      if (present.insert(l).second) existing.push_back(l);
    }
  };
  take_from(frequency_order);
  take_from(labels.labels());
  return existing;
}

PredictionRanking assemble_ranking(const Label& top1, std::span<const Label> residual,
                                   std::span<const Label> completion, int top_k,
                                   const LabelSpace& labels,
                                   std::span<const Label> frequency_order,
                                   Provenance top1_provenance, Provenance completion_provenance) {
  if (top_k < 1) throw std::invalid_argument("assemble_ranking: K must be >= 1");
  const auto k = static_cast<std::size_t>(top_k);
  PredictionRanking ranking;
  std::unordered_set<Label> seen{top1};
  ranking.ranks.push_back({top1, top1_provenance});
  auto append = [&](std::span<const Label> seq, Provenance prov) {
    for (const auto& l : seq) {
      if (ranking.ranks.size() >= k) return;
      if (seen.insert(l).second) ranking.ranks.push_back({l, prov});
    }
  };
  append(residual, Provenance::recall_residual);
  append(completion, completion_provenance);
  if (ranking.ranks.size() < k) {
    const auto padded = pad_ranking(ranking.labels(), top_k, labels, frequency_order);
    for (std::size_t i = ranking.ranks.size(); i < padded.size(); ++i) {
      ranking.ranks.push_back({padded[i], Provenance::pad});
    }
  }
  ranking.ranks.resize(std::min(ranking.ranks.size(), k));
  return ranking;
}

namespace {

// Valid labels from a model reply in order, first occurrence only. Absent
// when the reply holds no JSON array.
std::optional<std::vector<Label>> parse_label_list(const std::string& text,
                                                   const LabelSpace& labels,
                                                   const std::string& field) {
  auto array = extract_json_array(text);
  if (!array) return std::nullopt;
  std::vector<Label> out;
  std::unordered_set<Label> seen;
  for (const auto& item : *array) {
    std::optional<Label> label;
    if (item.is_string()) {
      label = labels.normalize(item.get<std::string>());
    } else if (item.is_object() && item.contains(field) && item[field].is_string()) {
      label = labels.normalize(item[field].get<std::string>());
    }
    if (label && seen.insert(*label).second) out.push_back(*label);
  }
  return out;
}

}  // namespace

DirectPrediction direct_predict(std::string_view name, const RecallContext& ctx, int top_k,
                                std::span<const Label> frequency_order) {
  if (top_k < 1) throw std::invalid_argument("direct_predict: K must be >= 1");
  if (name.empty()) throw std::invalid_argument("direct_predict: empty name");
  PromptBuilder prompts(ctx.labels, ctx.granularity, ctx.max_recall, top_k);
  const ChatRequest request{prompts.direct_system(), PromptBuilder::direct_user(name),
                            ctx.model_id, 1.0};
  const auto k = static_cast<std::size_t>(top_k);

  DirectPrediction out;
  out.calls = 1;
  auto labels = parse_label_list(ctx.backend.send(request).text, ctx.labels,
                                 prompts.attribute_field())
                    .value_or(std::vector<Label>{});
  if (labels.size() < k) {
    out.reprompts = 1;
    auto again = parse_label_list(ctx.backend.send(request, SendOptions{.bypass_cache = true}).text,
                                  ctx.labels, prompts.attribute_field())
                     .value_or(std::vector<Label>{});
    if (again.size() > labels.size()) labels = std::move(again);
  }
  if (labels.size() > k) labels.resize(k);
  out.valid_count = labels.size();
  out.labels = pad_ranking(std::move(labels), top_k, ctx.labels, frequency_order);
  return out;
}

CompletionResult complete_ranks(std::string_view name, const RecallSet& recall, const Label& top1,
                                const RecallContext& ctx, int top_k) {
  CompletionResult out;
  if (top_k <= 1) return out;
  PromptBuilder prompts(ctx.labels, ctx.granularity, ctx.max_recall, top_k);

  std::string user;
  if (recall.empty()) {
    user = prompts.completion_fallback_user(name, top1);
  } else {
    nlohmann::json people = nlohmann::json::array();
    for (const auto& e : recall.entries) {
      people.push_back({{"name", e.person}, {prompts.attribute_field(), e.nationality.str()}});
    }
    user = prompts.completion_user(
        name, people.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), top1);
  }
  const ChatRequest request{prompts.completion_system(), std::move(user), ctx.model_id, 1.0};

  try {
    out.calls = 1;
    auto parsed = parse_label_list(ctx.backend.send(request).text, ctx.labels,
                                   prompts.attribute_field());
    if (!parsed) {
      out.reprompts = 1;
      parsed = parse_label_list(ctx.backend.send(request, SendOptions{.bypass_cache = true}).text,
                                ctx.labels, prompts.attribute_field());
    }
    if (parsed) {
      for (auto& l : *parsed) {
        if (l == top1) continue;
        out.labels.push_back(std::move(l));
        if (out.labels.size() >= static_cast<std::size_t>(top_k - 1)) break;
      }
    }
  } catch (const BackendError&) {
    out.failed = true;
    out.labels.clear();
  }
  return out;
}

Predictor::Predictor(ChatBackend& backend, const LabelSpace& labels, PipelineConfig config)
    : backend_(backend), labels_(labels), config_(std::move(config)) {
  config_.validate(labels_);
}

PredictionResult Predictor::predict(std::string_view name) const {
  if (trim(name).empty()) throw std::invalid_argument("predict: empty name");
  const auto started = std::chrono::steady_clock::now();
  const auto& flags = config_.ablation;
  RecallContext ctx{backend_, labels_, config_.granularity, config_.model_id, config_.max_recall};

  PredictionResult result;
  result.name = std::string(name);

  // Phase 1: associative recall (both agents in parallel).
  DualRecall dual{AgentOutcome{AgentRecall{AgentKind::person, {}}},
                  AgentOutcome{AgentRecall{AgentKind::media, {}}}};
  if (flags.person_enabled() || flags.media_enabled()) {
    dual = run_dual_recall(name, ctx, flags.person_enabled(), flags.media_enabled());
  }
  result.calls.recall_calls = dual.person.calls + dual.media.calls;
  result.calls.reprompt_calls = dual.person.reprompts + dual.media.reprompts;

  // Phase 2: aggregation.
  result.recall = merge_recalls(dual.person.recall, dual.media.recall);
  const VoteTally tally = tally_votes(result.recall);

  // Phase 3: rank 1 from the vote, or from direct prediction when recall is empty.
  Label top1;
  Provenance top1_provenance = Provenance::vote;
  std::vector<Label> tail;
  Provenance tail_provenance = Provenance::completion;
  const bool fallback = result.recall.empty();
  DirectPrediction direct;
  if (fallback) {
    direct = direct_predict(name, ctx, config_.top_k, config_.frequency_order);
    result.calls.direct_calls = direct.calls;
    result.calls.reprompt_calls += direct.reprompts;
    top1 = direct.labels.front();
    top1_provenance = Provenance::direct;
  } else {
    top1 = *select_top1(tally);
  }

  // Phase 4: completion of ranks 2..K and assembly.
  std::vector<Label> residual;
  for (auto& l : positive_labels(tally)) {
    if (l != top1) residual.push_back(std::move(l));
  }
  if (!flags.drop_completion) {
    auto completion = complete_ranks(name, result.recall, top1, ctx, config_.top_k);
    result.calls.completion_calls = completion.calls;
    result.calls.reprompt_calls += completion.reprompts;
    tail = std::move(completion.labels);
  } else if (fallback && direct.valid_count > 1) {
    tail.assign(direct.labels.begin() + 1,
                direct.labels.begin() + static_cast<std::ptrdiff_t>(direct.valid_count));
    tail_provenance = Provenance::direct;
  }

  result.ranking = assemble_ranking(top1, residual, tail, config_.top_k, labels_,
                                    config_.frequency_order, top1_provenance, tail_provenance);
  result.ranking.used_fallback = fallback;
  result.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  return result;
}

std::vector<PredictionResult> predict_batch(const Predictor& predictor,
                                            std::span<const std::string> names,
                                            std::size_t concurrency) {
  std::vector<PredictionResult> results(names.size());
  if (names.empty()) return results;
  const std::size_t workers = std::clamp<std::size_t>(concurrency, 1, names.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&] {
    while (!stop.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= names.size()) return;
      try {
        results[i] = predictor.predict(names[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        stop = true;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

PredictionRanking project_ranking(const PredictionRanking& ranking, const Taxonomy& taxonomy,
                                  Granularity target, int top_k,
                                  std::span<const Label> pad_order) {
  const LabelSpace& space = taxonomy.space(target);
  if (top_k < 1 || static_cast<std::size_t>(top_k) > space.size()) {
    throw std::invalid_argument("project_ranking: K out of range for target label set");
  }
  PredictionRanking out;
  out.used_fallback = ranking.used_fallback;
  std::unordered_set<Label> seen;
  for (const auto& r : ranking.ranks) {
    if (out.ranks.size() >= static_cast<std::size_t>(top_k)) break;
    Label projected = taxonomy.project(r.label, target);
    if (seen.insert(projected).second) out.ranks.push_back({projected, r.provenance});
  }
  const auto padded = pad_ranking(out.labels(), top_k, space, pad_order);
  for (std::size_t i = out.ranks.size(); i < padded.size(); ++i) {
    out.ranks.push_back({padded[i], Provenance::pad});
  }
  return out;
}

}  // namespace lama
