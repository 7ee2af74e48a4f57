#include "lama/aggregation.hpp"

#include <algorithm>

namespace lama {

std::size_t VoteTally::count(const Label& label) const {
  auto it = counts_.find(label);
  return it == counts_.end() ? 0 : it->second;
}

std::optional<std::size_t> VoteTally::first_seen(const Label& label) const {
  auto it = first_seen_.find(label);
  if (it == first_seen_.end()) return std::nullopt;
  return it->second;
}

void VoteTally::add(const Label& label, std::size_t position) {
  ++counts_[label];
  first_seen_.try_emplace(label, position);
  ++total_;
}

RecallSet merge_recalls(const AgentRecall& person, const AgentRecall& media) {
  RecallSet set;
  set.entries.reserve(person.entries.size() + media.entries.size());
  set.entries.insert(set.entries.end(), person.entries.begin(), person.entries.end());
  set.entries.insert(set.entries.end(), media.entries.begin(), media.entries.end());
  return set;
}

VoteTally tally_votes(const RecallSet& recall) {
  VoteTally tally;
  for (std::size_t i = 0; i < recall.entries.size(); ++i) {
    tally.add(recall.entries[i].nationality, i);
  }
  return tally;
}

std::vector<Label> positive_labels(const VoteTally& tally) {
  std::vector<std::pair<Label, std::size_t>> ranked(tally.counts().begin(), tally.counts().end());
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return *tally.first_seen(a.first) < *tally.first_seen(b.first);
  });
  std::vector<Label> out;
  out.reserve(ranked.size());
  for (auto& [label, count] : ranked) out.push_back(label);
  return out;
}

std::optional<Label> select_top1(const VoteTally& tally) {
  std::optional<Label> best;
  std::size_t best_count = 0;
  std::size_t best_seen = 0;
  for (const auto& [label, count] : tally.counts()) {
    const std::size_t seen = *tally.first_seen(label);
    if (!best || count > best_count || (count == best_count && seen < best_seen)) {
      best = label;
      best_count = count;
      best_seen = seen;
    }
  }
  return best;
}

}  // namespace lama
