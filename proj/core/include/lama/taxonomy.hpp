#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lama {

class LabelSpace;

// A canonical label from a closed label set. Only a LabelSpace can mint one,
// so holding a Label means the string was validated against some set.
class Label {
 public:
  Label() = default;

  const std::string& str() const noexcept { return name_; }
  bool empty() const noexcept { return name_.empty(); }

  friend bool operator==(const Label&, const Label&) = default;
  friend std::strong_ordering operator<=>(const Label& a, const Label& b) {
    return a.name_ <=> b.name_;
  }

 private:
  friend class LabelSpace;
  explicit Label(std::string name) : name_(std::move(name)) {}

  std::string name_;
};

std::ostream& operator<<(std::ostream& os, const Label& label);

class UnknownLabelError : public std::invalid_argument {
 public:
  explicit UnknownLabelError(std::string_view raw);
};

// Ordered closed set of labels with case-insensitive lookup.
class LabelSpace {
 public:
  LabelSpace() = default;
  // Throws std::invalid_argument on empty names or case-insensitive duplicates.
  explicit LabelSpace(std::vector<std::string> names);

  // Trims surrounding whitespace and matches case-insensitively.
  std::optional<Label> normalize(std::string_view raw) const;
  // Like normalize(), but throws UnknownLabelError instead of returning absent.
  Label at(std::string_view raw) const;

  bool contains(const Label& label) const;
  std::size_t index_of(const Label& label) const;

  const std::vector<Label>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  // Comma-separated list, in set order, as substituted into prompts.
  std::string joined(std::string_view sep = ", ") const;

 private:
  std::vector<Label> labels_;
  std::unordered_map<std::string, std::size_t> folded_;
};

enum class Granularity { nationality, region, continent };

std::string_view to_string(Granularity g);
Granularity granularity_from_string(std::string_view s);

class TaxonomyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Expected cardinalities declared by `#! totals` / `#! region` lines.
struct DeclaredCounts {
  std::optional<std::size_t> nationalities;
  std::optional<std::size_t> regions;
  std::optional<std::size_t> continents;
  std::map<std::string, std::size_t> per_region;
};

// Nationality -> region -> continent hierarchy. Immutable once constructed,
// so a single instance can be shared freely across threads.
class Taxonomy {
 public:
  static Taxonomy load(const std::filesystem::path& path);
  static Taxonomy parse(std::istream& in, std::string_view source = "<stream>");

  const LabelSpace& nationalities() const noexcept { return nationalities_; }
  const LabelSpace& regions() const noexcept { return regions_; }
  const LabelSpace& continents() const noexcept { return continents_; }
  const LabelSpace& space(Granularity g) const;

  Label region_of(const Label& nationality) const;
  Label continent_of(const Label& region) const;
  Label continent_of_nationality(const Label& nationality) const;
  // Maps a nationality label to the requested granularity.
  Label project(const Label& nationality, Granularity g) const;

  std::size_t nationality_count(const Label& region) const;
  std::size_t region_count(const Label& continent) const;

  const DeclaredCounts& declared() const noexcept { return declared_; }

  // Hex digest over the canonical rows; part of report fingerprints.
  const std::string& fingerprint() const noexcept { return fingerprint_; }

 private:
  Taxonomy() = default;

  LabelSpace nationalities_;
  LabelSpace regions_;
  LabelSpace continents_;
  std::vector<std::size_t> region_index_;     // per nationality
  std::vector<std::size_t> continent_index_;  // per region
  DeclaredCounts declared_;
  std::string fingerprint_;
};

// Reference hierarchy of the 99-label nationality task: per-region label counts.
struct RegionCount {
  std::string_view continent;
  std::string_view region;
  std::size_t nationalities;
};
const std::vector<RegionCount>& reference_region_counts();

// Returns a description of every mismatch against reference_region_counts();
// empty when the taxonomy reproduces it exactly.
std::vector<std::string> check_reference_counts(const Taxonomy& taxonomy);

}  // namespace lama

template <>
struct std::hash<lama::Label> {
  std::size_t operator()(const lama::Label& l) const noexcept {
    return std::hash<std::string>{}(l.str());
  }
};
