#include "lama/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace lama {

namespace {

std::string fixed3(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

std::string signed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.3f", v);
  return buf;
}

// Left-aligned first column, right-aligned numeric columns.
class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  std::string render() const {
    std::vector<std::size_t> width;
    for (const auto& row : rows_) {
      width.resize(std::max(width.size(), row.size()), 0);
      for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& row) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        const auto pad = std::string(width[c] - row[c].size(), ' ');
        if (c > 0) out << "  ";
        out << (c == 0 ? row[c] + pad : pad + row[c]);
      }
      out << '\n';
    };
    line(rows_.front());
    std::size_t total = 0;
    for (auto w : width) total += w;
    out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    for (std::size_t r = 1; r < rows_.size(); ++r) line(rows_[r]);
    return out.str();
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

std::string name_of(const EvalReport& r) { return r.label.empty() ? "(unnamed)" : r.label; }

}  // namespace

std::string render_metrics_table(const std::vector<EvalReport>& reports) {
  std::vector<int> ks;
  for (const auto& r : reports) {
    for (const auto& [k, v] : r.precision_at) {
      if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
    }
  }
  std::sort(ks.begin(), ks.end());
  std::vector<std::string> header{"Method", "Accuracy", "Macro-F1"};
  for (int k : ks) header.push_back("P@" + std::to_string(k));
  Table table(std::move(header));
  for (const auto& r : reports) {
    std::vector<std::string> row{name_of(r), fixed3(r.accuracy), fixed3(r.macro_f1)};
    for (int k : ks) {
      auto it = r.precision_at.find(k);
      row.push_back(it == r.precision_at.end() ? "-" : fixed3(it->second));
    }
    table.add(std::move(row));
  }
  return table.render();
}

std::string render_ablation_table(const std::vector<EvalReport>& reports,
                                  const std::map<std::string, double>& delta_accuracy) {
  Table table({"Configuration", "Accuracy", "Macro-F1", "P@3", "P@5", "dAcc"});
  for (const auto& r : reports) {
    auto p = [&](int k) {
      auto it = r.precision_at.find(k);
      return it == r.precision_at.end() ? std::string("-") : fixed3(it->second);
    };
    auto d = delta_accuracy.find(r.label);
    table.add({name_of(r), fixed3(r.accuracy), fixed3(r.macro_f1), p(3), p(5),
               d == delta_accuracy.end() ? "-" : signed3(d->second)});
  }
  return table.render();
}

std::string render_confusion_table(const ConfusionSummary& summary) {
  Table table({"True -> Pred", "Count", "Same"});
  for (const auto& p : summary.pairs) {
    table.add({p.true_label.str() + " -> " + p.predicted_label.str(), std::to_string(p.count),
               p.same_region ? "yes" : "no"});
  }
  return table.render() + "Region match rate: " + fixed3(summary.region_match_rate) + "\n";
}

std::string render_region_table(const std::vector<EvalReport>& reports) {
  Table table({"Method", "Nat Correct", "Nat Wrong Reg Correct", "Nat Wrong Reg Wrong",
               "Region Accuracy"});
  for (const auto& r : reports) {
    if (!r.region_decomposition) continue;
    const auto& d = *r.region_decomposition;
    table.add({name_of(r), fixed3(d.nat_correct), fixed3(d.nat_wrong_region_correct),
               fixed3(d.nat_wrong_region_wrong), fixed3(d.region_accuracy)});
  }
  return table.render();
}

std::string render_bin_table(const std::vector<EvalReport>& reports) {
  Table table({"Method", "Head", "Mid", "Tail", "Drop"});
  for (const auto& r : reports) {
    if (!r.per_bin) continue;
    const auto& b = *r.per_bin;
    table.add({name_of(r), fixed3(b.head.accuracy), fixed3(b.mid.accuracy), fixed3(b.tail.accuracy),
               b.relative_drop ? fixed3(*b.relative_drop * 100).append("%") : "-"});
  }
  return table.render();
}

std::string render_report(const EvalReport& report) {
  std::ostringstream out;
  out << "== " << name_of(report) << " (" << to_string(report.granularity) << ", "
      << report.samples << " samples";
  if (!report.config_fingerprint.empty()) out << ", config " << report.config_fingerprint;
  out << ") ==\n\n";
  out << render_metrics_table({report}) << '\n';
  if (report.per_bin) out << render_bin_table({report}) << '\n';
  if (report.region_decomposition) out << render_region_table({report}) << '\n';
  if (!report.confusion.pairs.empty()) out << render_confusion_table(report.confusion) << '\n';
  if (report.calls) {
    const auto& c = *report.calls;
    char mean[32];
    std::snprintf(mean, sizeof mean, "%.2f", c.mean_total_calls);
    out << "Calls: " << c.totals.total() << " total over " << c.samples << " samples (mean "
        << mean << "), " << c.fallback_samples << " fallback, " << c.totals.reprompt_calls
        << " re-asks\n";
  }
  return out.str();
}

std::string render_error_dump(const std::vector<PredictionRecord>& records,
                              const Taxonomy& taxonomy) {
  std::ostringstream out;
  out << "name\tgold\tprediction\tregion_match\n";
  for (const auto& r : records) {
    if (!r.gold || r.ranking.ranks.empty()) continue;
    const Label& pred = r.ranking.ranks.front().label;
    if (pred == *r.gold) continue;
    std::string match = "-";
    if (r.granularity == Granularity::nationality) {
      match = taxonomy.region_of(pred) == taxonomy.region_of(*r.gold) ? "yes" : "no";
    }
    out << r.name << '\t' << r.gold->str() << '\t' << pred.str() << '\t' << match << '\n';
  }
  return out.str();
}

}  // namespace lama
