#include "lama/taxonomy.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "lama/hashing.hpp"

namespace lama {

std::ostream& operator<<(std::ostream& os, const Label& label) { return os << label.str(); }

UnknownLabelError::UnknownLabelError(std::string_view raw)
    : std::invalid_argument("unknown label: '" + std::string(raw) + "'") {}

LabelSpace::LabelSpace(std::vector<std::string> names) {
  labels_.reserve(names.size());
  for (auto& raw : names) {
    std::string name(trim(raw));
    if (name.empty()) throw std::invalid_argument("label space: empty label");
    auto [it, inserted] = folded_.emplace(ascii_lower(name), labels_.size());
    if (!inserted) {
      throw std::invalid_argument("label space: duplicate label '" + name + "'");
    }
    labels_.push_back(Label(std::move(name)));
  }
}

std::optional<Label> LabelSpace::normalize(std::string_view raw) const {
  auto it = folded_.find(ascii_lower(trim(raw)));
  if (it == folded_.end()) return std::nullopt;
  return labels_[it->second];
}

Label LabelSpace::at(std::string_view raw) const {
  if (auto l = normalize(raw)) return *l;
  throw UnknownLabelError(raw);
}

bool LabelSpace::contains(const Label& label) const {
  auto it = folded_.find(ascii_lower(label.str()));
  return it != folded_.end() && labels_[it->second] == label;
}

std::size_t LabelSpace::index_of(const Label& label) const {
  auto it = folded_.find(ascii_lower(label.str()));
  if (it == folded_.end() || labels_[it->second] != label) throw UnknownLabelError(label.str());
  return it->second;
}

std::string LabelSpace::joined(std::string_view sep) const {
  std::string out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (i) out += sep;
    out += labels_[i].str();
  }
  return out;
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::nationality: return "nationality";
    case Granularity::region: return "region14";
    case Granularity::continent: return "continent6";
  }
  return "?";
}

Granularity granularity_from_string(std::string_view s) {
  const std::string v = ascii_lower(trim(s));
  if (v == "nationality") return Granularity::nationality;
  if (v == "region14" || v == "region") return Granularity::region;
  if (v == "continent6" || v == "continent") return Granularity::continent;
  throw std::invalid_argument("unknown granularity '" + std::string(s) +
                              "' (expected nationality, region14, continent6)");
}

namespace {

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t parse_count(const std::string& s, std::string_view where) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(s, &used);
    if (used != s.size() || v < 0) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw TaxonomyError(std::string(where) + ": invalid count '" + s + "'");
  }
}

struct Row {
  std::string nationality, region, continent;
  std::size_t line;
};

}  // namespace

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TaxonomyError("taxonomy file not found or unreadable: " + path.string());
  return parse(in, path.string());
}

Taxonomy Taxonomy::parse(std::istream& in, std::string_view source) {
  const std::string src(source);
  DeclaredCounts declared;
  std::vector<Row> rows;
  bool saw_header = false;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = src + ":" + std::to_string(lineno);
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.starts_with("#!")) {
      auto fields = split_tabs(trim(view.substr(2)));
      if (fields.size() == 4 && fields[0] == "totals") {
        declared.nationalities = parse_count(fields[1], where);
        declared.regions = parse_count(fields[2], where);
        declared.continents = parse_count(fields[3], where);
      } else if (fields.size() == 3 && fields[0] == "region") {
        declared.per_region[fields[1]] = parse_count(fields[2], where);
      } else {
        throw TaxonomyError(where + ": unrecognized directive '" + std::string(view) + "'");
      }
      continue;
    }
    if (view.starts_with('#')) continue;

    auto fields = split_tabs(line);
    if (!saw_header) {
      if (fields.size() != 3 || ascii_lower(fields[0]) != "nationality" ||
          ascii_lower(fields[1]) != "region" || ascii_lower(fields[2]) != "continent") {
        throw TaxonomyError(where + ": expected header 'nationality<TAB>region<TAB>continent'");
      }
      saw_header = true;
      continue;
    }
    if (fields.empty() || fields[0].empty()) {
      throw TaxonomyError(where + ": missing nationality");
    }
    if (fields.size() < 2 || fields[1].empty()) {
      throw TaxonomyError(where + ": nationality '" + fields[0] + "' has no region");
    }
    if (fields.size() < 3 || fields[2].empty()) {
      throw TaxonomyError(where + ": region '" + fields[1] + "' has no continent");
    }
    if (fields.size() > 3) throw TaxonomyError(where + ": too many columns");
    rows.push_back({fields[0], fields[1], fields[2], lineno});
  }
  if (!saw_header) throw TaxonomyError(src + ": missing header row");
  if (rows.empty()) throw TaxonomyError(src + ": no nationality rows");

  // Build the three label sets, checking totality and uniqueness of mappings.
  std::vector<std::string> nat_names, region_names, continent_names;
  std::unordered_map<std::string, std::size_t> nat_seen, region_seen, continent_seen;
  std::vector<std::size_t> region_of_nat;
  std::vector<std::size_t> continent_of_region;
  std::string canonical;

  for (const auto& row : rows) {
    const std::string where = src + ":" + std::to_string(row.line);
    auto [rit, rnew] = region_seen.emplace(ascii_lower(row.region), region_names.size());
    if (rnew) region_names.push_back(row.region);
    auto [cit, cnew] = continent_seen.emplace(ascii_lower(row.continent), continent_names.size());
    if (cnew) continent_names.push_back(row.continent);

    if (rnew) {
      continent_of_region.push_back(cit->second);
    } else if (continent_of_region[rit->second] != cit->second) {
      throw TaxonomyError(where + ": region '" + row.region + "' mapped to two continents ('" +
                          continent_names[continent_of_region[rit->second]] + "' and '" +
                          row.continent + "')");
    }

    auto [nit, nnew] = nat_seen.emplace(ascii_lower(row.nationality), nat_names.size());
    if (!nnew) {
      const std::string& prev_region = region_names[region_of_nat[nit->second]];
      if (ascii_lower(prev_region) != ascii_lower(row.region)) {
        throw TaxonomyError(where + ": duplicate mapping: '" + row.nationality +
                            "' mapped to two regions ('" + prev_region + "' and '" + row.region +
                            "')");
      }
      throw TaxonomyError(where + ": duplicate label '" + row.nationality + "'");
    }
    nat_names.push_back(row.nationality);
    region_of_nat.push_back(rit->second);
    canonical += row.nationality + '\t' + row.region + '\t' + row.continent + '\n';
  }

  Taxonomy t;
  t.nationalities_ = LabelSpace(nat_names);
  t.regions_ = LabelSpace(region_names);
  t.continents_ = LabelSpace(continent_names);
  t.region_index_ = std::move(region_of_nat);
  t.continent_index_ = std::move(continent_of_region);
  t.declared_ = declared;
  t.fingerprint_ = sha256_hex(canonical).substr(0, 16);

  auto mismatch = [&](std::string_view what, std::size_t expected, std::size_t got) {
    std::ostringstream os;
    os << src << ": count mismatch: expected " << expected << ' ' << what << ", found " << got;
    throw TaxonomyError(os.str());
  };
  if (declared.nationalities && *declared.nationalities != t.nationalities_.size())
    mismatch("nationalities", *declared.nationalities, t.nationalities_.size());
  if (declared.regions && *declared.regions != t.regions_.size())
    mismatch("regions", *declared.regions, t.regions_.size());
  if (declared.continents && *declared.continents != t.continents_.size())
    mismatch("continents", *declared.continents, t.continents_.size());
  for (const auto& [region, expected] : declared.per_region) {
    auto label = t.regions_.normalize(region);
    const std::size_t got = label ? t.nationality_count(*label) : 0;
    if (got != expected) mismatch("nationalities in region '" + region + "'", expected, got);
  }
  return t;
}

const LabelSpace& Taxonomy::space(Granularity g) const {
  switch (g) {
    case Granularity::nationality: return nationalities_;
    case Granularity::region: return regions_;
    case Granularity::continent: return continents_;
  }
  return nationalities_;
}

Label Taxonomy::region_of(const Label& nationality) const {
  return regions_.labels()[region_index_[nationalities_.index_of(nationality)]];
}

Label Taxonomy::continent_of(const Label& region) const {
  return continents_.labels()[continent_index_[regions_.index_of(region)]];
}

Label Taxonomy::continent_of_nationality(const Label& nationality) const {
  return continent_of(region_of(nationality));
}

Label Taxonomy::project(const Label& nationality, Granularity g) const {
  switch (g) {
    case Granularity::nationality: return nationalities_.labels()[nationalities_.index_of(nationality)];
    case Granularity::region: return region_of(nationality);
    case Granularity::continent: return continent_of_nationality(nationality);
  }
  return nationality;
}

std::size_t Taxonomy::nationality_count(const Label& region) const {
  const std::size_t r = regions_.index_of(region);
  std::size_t n = 0;
  for (auto idx : region_index_) n += (idx == r);
  return n;
}

std::size_t Taxonomy::region_count(const Label& continent) const {
  const std::size_t c = continents_.index_of(continent);
  std::size_t n = 0;
  for (auto idx : continent_index_) n += (idx == c);
  return n;
}

const std::vector<RegionCount>& reference_region_counts() {
  static const std::vector<RegionCount> kCounts = {
      {"Asia", "East Asia", 5},
      {"Asia", "Southeast Asia", 7},
      {"Asia", "South Asia", 6},
      {"Asia", "Caucasus & Central Asia", 2},
      {"Europe", "Western Europe", 11},
      {"Europe", "Northern Europe", 1},
      {"Europe", "Southern Europe", 5},
      {"Europe", "Eastern Europe", 15},
      {"Americas", "North America", 3},
      {"Americas", "Central America & Caribbean", 7},
      {"Americas", "South America", 10},
      {"Middle East", "Middle East", 10},
      {"Africa", "Africa", 15},
      {"Oceania", "Oceania", 2},
  };
  return kCounts;
}

std::vector<std::string> check_reference_counts(const Taxonomy& taxonomy) {
  std::vector<std::string> problems;
  const auto& ref = reference_region_counts();
  std::size_t total = 0;
  for (const auto& rc : ref) total += rc.nationalities;
  if (taxonomy.nationalities().size() != total) {
    problems.push_back("expected " + std::to_string(total) + " nationalities, found " +
                       std::to_string(taxonomy.nationalities().size()));
  }
  if (taxonomy.regions().size() != ref.size()) {
    problems.push_back("expected " + std::to_string(ref.size()) + " regions, found " +
                       std::to_string(taxonomy.regions().size()));
  }
  if (taxonomy.continents().size() != 6) {
    problems.push_back("expected 6 continents, found " +
                       std::to_string(taxonomy.continents().size()));
  }
  for (const auto& rc : ref) {
    auto region = taxonomy.regions().normalize(rc.region);
    if (!region) {
      problems.push_back("missing region '" + std::string(rc.region) + "'");
      continue;
    }
    const std::size_t got = taxonomy.nationality_count(*region);
    if (got != rc.nationalities) {
      problems.push_back("region '" + std::string(rc.region) + "': expected " +
                         std::to_string(rc.nationalities) + ", found " + std::to_string(got));
    }
    const Label continent = taxonomy.continent_of(*region);
    if (ascii_lower(continent.str()) != ascii_lower(rc.continent)) {
      problems.push_back("region '" + std::string(rc.region) + "' belongs to '" +
                         continent.str() + "', expected '" + std::string(rc.continent) + "'");
    }
  }
  return problems;
}

}  // namespace lama
