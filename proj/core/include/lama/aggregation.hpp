#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "lama/recall_agents.hpp"
#include "lama/taxonomy.hpp"

namespace lama {

// Union of both agents' recalls: Person entries first, then Media entries,
// each in emit order. Cross-agent duplicates are kept.
struct RecallSet {
  std::vector<RecallEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
  friend bool operator==(const RecallSet&, const RecallSet&) = default;
};

// Empirical label distribution over a RecallSet. Labels never seen are
// simply absent (count zero).
class VoteTally {
 public:
  std::size_t count(const Label& label) const;
  // Index of the label's first occurrence in the RecallSet; absent if unseen.
  std::optional<std::size_t> first_seen(const Label& label) const;

  const std::map<Label, std::size_t>& counts() const noexcept { return counts_; }
  std::size_t total() const noexcept { return total_; }
  bool empty() const noexcept { return total_ == 0; }

  void add(const Label& label, std::size_t position);

 private:
  std::map<Label, std::size_t> counts_;
  std::map<Label, std::size_t> first_seen_;
  std::size_t total_ = 0;
};

RecallSet merge_recalls(const AgentRecall& person, const AgentRecall& media);

VoteTally tally_votes(const RecallSet& recall);

// Highest count; ties go to the label recalled first. Absent for an empty tally.
std::optional<Label> select_top1(const VoteTally& tally);

// Every label with a positive count, by (count desc, first_seen asc).
std::vector<Label> positive_labels(const VoteTally& tally);

}  // namespace lama
