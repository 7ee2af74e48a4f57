#include "lama/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "lama/hashing.hpp"

namespace lama {

namespace {

// Uniform draw from [0, n) by rejection, so results do not depend on the
// standard library's distribution implementation.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(bounded_draw(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

std::map<std::string, std::vector<std::size_t>> group_by_label(const std::vector<LabeledName>& data) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < data.size(); ++i) groups[data[i].nationality].push_back(i);
  return groups;
}

}  // namespace

std::vector<LabeledName> preprocess(const std::vector<LabeledName>& raw, std::size_t min_count,
                                    std::size_t max_count, std::uint64_t seed) {
  if (max_count == 0 || min_count > max_count) {
    throw DatasetError("preprocess: need 0 < min_count <= max_count");
  }
  std::mt19937_64 rng(seed);
  std::vector<LabeledName> out;
  for (auto& [label, indices] : group_by_label(raw)) {
    if (indices.size() < min_count) continue;
    if (indices.size() > max_count) {
      shuffle_in_place(indices, rng);
      indices.resize(max_count);
      std::sort(indices.begin(), indices.end());
    }
    for (auto i : indices) out.push_back(raw[i]);
  }
  if (out.empty()) {
    throw DatasetError("preprocess: no class has at least " + std::to_string(min_count) + " samples");
  }
  return out;
}

std::array<std::size_t, 3> allocate_class(std::size_t n, const SplitRatios& ratios) {
  const std::array<double, 3> r{ratios.train, ratios.validation, ratios.test};
  double sum = 0;
  for (double x : r) {
    if (!(x >= 0)) throw DatasetError("split ratios must be non-negative");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DatasetError("split ratios must sum to 1");

  std::array<std::size_t, 3> alloc{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double quota = static_cast<double>(n) * r[i];
    const double floor = std::floor(quota + 1e-9);
    alloc[i] = static_cast<std::size_t>(floor);
    frac[i] = std::max(0.0, quota - floor);
    assigned += alloc[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b] + 1e-12; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++alloc[order[k % 3]];
  return alloc;
}

DatasetSplit stratified_split(const std::vector<LabeledName>& data, const SplitRatios& ratios,
                              std::uint64_t seed) {
  DatasetSplit split;
  split.seed = seed;
  std::mt19937_64 rng(seed);
  for (auto& [label, indices] : group_by_label(data)) {
    const auto alloc = allocate_class(indices.size(), ratios);
    if (alloc[0] == 0 || alloc[1] == 0 || alloc[2] == 0) {
      throw DatasetError("class '" + label + "' has " + std::to_string(indices.size()) +
                         " samples, too few to appear in every split");
    }
    shuffle_in_place(indices, rng);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < alloc[0]; ++i) split.train.push_back(data[indices[pos++]]);
    for (std::size_t i = 0; i < alloc[1]; ++i) split.validation.push_back(data[indices[pos++]]);
    for (std::size_t i = 0; i < alloc[2]; ++i) split.test.push_back(data[indices[pos++]]);
  }
  shuffle_in_place(split.train, rng);
  shuffle_in_place(split.validation, rng);
  shuffle_in_place(split.test, rng);
  return split;
}

FrequencyBins::Bin FrequencyBins::bin_of(const Label& label) const {
  auto in = [&](const std::vector<Label>& v) { return std::find(v.begin(), v.end(), label) != v.end(); };
  if (in(head)) return Bin::head;
  if (in(mid)) return Bin::mid;
  if (in(tail)) return Bin::tail;
  throw std::out_of_range("label '" + label.str() + "' is not in any frequency bin");
}

bool FrequencyBins::contains(const Label& label) const {
  return std::find(frequency_order.begin(), frequency_order.end(), label) != frequency_order.end();
}

std::string_view to_string(FrequencyBins::Bin bin) {
  switch (bin) {
    case FrequencyBins::Bin::head: return "head";
    case FrequencyBins::Bin::mid: return "mid";
    case FrequencyBins::Bin::tail: return "tail";
  }
  return "?";
}

FrequencyBins assign_frequency_bins(const std::vector<LabeledName>& train, const LabelSpace& labels) {
  if (labels.size() % 3 != 0) {
    throw DatasetError("frequency bins need a label count divisible by 3, got " +
                       std::to_string(labels.size()));
  }
  std::vector<std::size_t> counts(labels.size(), 0);
  for (const auto& row : train) {
    auto label = labels.normalize(row.nationality);
    if (!label) throw DatasetError("training label '" + row.nationality + "' is outside the label set");
    ++counts[labels.index_of(*label)];
  }
  FrequencyBins bins;
  bins.frequency_order = labels.labels();
  for (const auto& l : bins.frequency_order) {
    if (counts[labels.index_of(l)] == 0) {
      throw DatasetError("label '" + l.str() + "' has no training samples");
    }
  }
  std::sort(bins.frequency_order.begin(), bins.frequency_order.end(),
            [&](const Label& a, const Label& b) {
              const auto ca = counts[labels.index_of(a)];
              const auto cb = counts[labels.index_of(b)];
              return ca != cb ? ca > cb : a < b;
            });
  const std::size_t third = labels.size() / 3;
  const auto& f = bins.frequency_order;
  bins.head.assign(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(third));
  bins.mid.assign(f.begin() + static_cast<std::ptrdiff_t>(third),
                  f.begin() + static_cast<std::ptrdiff_t>(2 * third));
  bins.tail.assign(f.begin() + static_cast<std::ptrdiff_t>(2 * third), f.end());
  return bins;
}

std::map<std::string, std::size_t> class_counts(const std::vector<LabeledName>& data) {
  std::map<std::string, std::size_t> counts;
  for (const auto& row : data) ++counts[row.nationality];
  return counts;
}

std::vector<LabeledName> read_labeled_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::vector<LabeledName> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": expected name<TAB>label");
    }
    std::string name(trim(std::string_view(line).substr(0, tab)));
    std::string label(trim(std::string_view(line).substr(tab + 1)));
    if (line_no == 1 && ascii_lower(name) == "name") continue;
    if (name.empty() || label.empty()) {
      throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": empty field");
    }
    rows.push_back({std::move(name), std::move(label)});
  }
  return rows;
}

void write_labeled_tsv(const std::filesystem::path& path, const std::vector<LabeledName>& rows) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write " + path.string());
  out << "name\tnationality\n";
  for (const auto& row : rows) out << row.name << '\t' << row.nationality << '\n';
  if (!out) throw DatasetError("write failed for " + path.string());
}

nlohmann::json split_manifest(const DatasetSplit& split, const FrequencyBins& bins,
                              const PrepareSummary& summary, std::size_t min_count,
                              std::size_t max_count) {
  auto names = [](const std::vector<Label>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& l : v) a.push_back(l.str());
    return a;
  };
  nlohmann::json classes = nlohmann::json::object();
  auto add = [&](const std::vector<LabeledName>& rows, const char* key) {
    for (const auto& [label, n] : class_counts(rows)) classes[label][key] = n;
  };
  add(split.train, "train");
  add(split.validation, "validation");
  add(split.test, "test");
  return {
      {"seed", split.seed},
      {"min_count", min_count},
      {"max_count", max_count},
      {"totals",
       {{"raw_samples", summary.raw_samples},
        {"raw_classes", summary.raw_classes},
        {"samples", summary.samples},
        {"classes", summary.classes},
        {"train", summary.train},
        {"validation", summary.validation},
        {"test", summary.test}}},
      {"classes", std::move(classes)},
      {"frequency_order", names(bins.frequency_order)},
      {"bins", {{"head", names(bins.head)}, {"mid", names(bins.mid)}, {"tail", names(bins.tail)}}},
  };
}

FrequencyBins bins_from_manifest(const nlohmann::json& manifest, const LabelSpace& labels) {
  auto read = [&](const nlohmann::json& a) {
    std::vector<Label> out;
    for (const auto& item : a) out.push_back(labels.at(item.get<std::string>()));
    return out;
  };
  FrequencyBins bins;
  bins.frequency_order = read(manifest.at("frequency_order"));
  const auto& b = manifest.at("bins");
  bins.head = read(b.at("head"));
  bins.mid = read(b.at("mid"));
  bins.tail = read(b.at("tail"));
  return bins;
}

}  // namespace lama
