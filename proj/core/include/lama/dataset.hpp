#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lama/taxonomy.hpp"

namespace lama {

// A romanized name with its nationality string. Labels stay strings here:
// preprocessing is what decides the working label set.
struct LabeledName {
  std::string name;
  std::string nationality;
  friend bool operator==(const LabeledName&, const LabeledName&) = default;
  friend auto operator<=>(const LabeledName&, const LabeledName&) = default;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultMinCount = 500;
inline constexpr std::size_t kDefaultMaxCount = 800;

// Drops classes with fewer than `min_count` samples and keeps a seeded
// uniform subsample of exactly `max_count` from larger ones. Output is sorted
// by label; within a class the original relative order is kept, which makes
// the transform idempotent. Throws DatasetError when no class survives.
std::vector<LabeledName> preprocess(const std::vector<LabeledName>& raw,
                                    std::size_t min_count = kDefaultMinCount,
                                    std::size_t max_count = kDefaultMaxCount,
                                    std::uint64_t seed = 0);

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<LabeledName> train;
  std::vector<LabeledName> validation;
  std::vector<LabeledName> test;
  std::uint64_t seed = 0;
};

// Per-class largest-remainder allocation of n samples. Ties in the
// fractional part go to the earlier split (train, validation, test).
std::array<std::size_t, 3> allocate_class(std::size_t n, const SplitRatios& ratios);

// Seeded per-class shuffle, proportional allocation, then a global shuffle
// of each split. Every class must receive at least one sample per split.
DatasetSplit stratified_split(const std::vector<LabeledName>& data, const SplitRatios& ratios = {},
                              std::uint64_t seed = 0);

struct FrequencyBins {
  std::vector<Label> head;
  std::vector<Label> mid;
  std::vector<Label> tail;
  std::vector<Label> frequency_order;  // training count desc, ties by name

  enum class Bin { head, mid, tail };
  Bin bin_of(const Label& label) const;  // throws std::out_of_range if unbinned
  bool contains(const Label& label) const;
};

std::string_view to_string(FrequencyBins::Bin bin);

// Sorts labels by training count (desc, ties lexicographic) and cuts the
// order into equal thirds. Every label of `labels` must occur in `train`.
FrequencyBins assign_frequency_bins(const std::vector<LabeledName>& train, const LabelSpace& labels);

std::map<std::string, std::size_t> class_counts(const std::vector<LabeledName>& data);

// `name<TAB>nationality` per line.
std::vector<LabeledName> read_labeled_tsv(const std::filesystem::path& path);
void write_labeled_tsv(const std::filesystem::path& path, const std::vector<LabeledName>& rows);

struct PrepareSummary {
  std::size_t raw_samples = 0;
  std::size_t raw_classes = 0;
  std::size_t samples = 0;
  std::size_t classes = 0;
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

// Manifest for a split: seed, filter settings, per-class counts per split,
// totals, frequency order and head/mid/tail bins.
nlohmann::json split_manifest(const DatasetSplit& split, const FrequencyBins& bins,
                              const PrepareSummary& summary, std::size_t min_count,
                              std::size_t max_count);

// Reads bins back from a manifest, resolving labels through `labels`.
FrequencyBins bins_from_manifest(const nlohmann::json& manifest, const LabelSpace& labels);

}  // namespace lama
